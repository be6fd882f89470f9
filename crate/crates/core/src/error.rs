use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParam(String),

    #[error("vertex {0} not in window")]
    UnknownVertex(u64),

    #[error("unreachable (possibly truncation): no path between {from} and {to} in window")]
    Unreachable { from: u64, to: u64 },

    #[error("window truncation: {0}")]
    Truncated(String),

    #[error("level {0} outside window heights [{1}, {2}]")]
    LevelOutOfWindow(i32, i32, i32),

    #[error("empty cell for node at level {level} index {index}")]
    EmptyCell { level: i32, index: usize },

    #[error("solver did not converge after {iterations} iterations (residual {residual:.3e})")]
    NonConvergence { iterations: usize, residual: f64 },

    #[error("horizon {horizon} exceeds certified window radius {radius} from base vertex")]
    HorizonExceedsWindow { horizon: usize, radius: usize },

    #[error("invalid bisection bracket: rate({p_lo}) = {r_lo:.4}, rate({p_hi}) = {r_hi:.4}")]
    BracketInvalid { p_lo: f64, p_hi: f64, r_lo: f64, r_hi: f64 },

    #[error("no certified cells available for the requested computation")]
    NoCertifiedCells,

    #[error("spectral dimension formula undefined: log N - log R = {0:.3e} <= 0")]
    DegenerateRates(f64),

    #[error("network reduction stalled with {vertices} vertices remaining")]
    ReductionStalled { vertices: usize },

    #[error("not a triangle: vertices {0:?} are not pairwise adjacent")]
    NotATriangle([u64; 3]),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("serialization error: {0}")]
    Json(#[from] serde_json::Error),
}

//! Estimation of Ahlfors-regular conformal dimension and spectral dimensions
//! of infinite graphs from finite windows: hierarchical partitions, discrete
//! p-energies, effective resistance, and random-walk heat kernels.

pub mod energy;
pub mod error;
pub mod families;
pub mod framework;
pub mod graph;
pub mod metrics;
pub mod partition;
pub mod pipeline;
pub mod report;
pub mod resistance;
pub mod solve;

pub use error::{Error, Result};

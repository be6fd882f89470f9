//! Machine-readable outputs: run configuration with content hash, the
//! dimension report, and CSV table writers. Non-Monte-Carlo outputs are
//! byte-identical across runs of the same configuration.

use crate::energy::{ArcEstimate, RateEstimate};
use crate::error::Result;
use crate::families::FamilySpec;
use crate::framework::FrameworkReport;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::fmt::Write as _;
use std::path::Path;

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunConfig {
    pub family: FamilySpec,
    #[serde(default = "default_n1")]
    pub n1: u32,
    #[serde(default = "default_n2")]
    pub n2: u32,
    #[serde(default = "default_nfat")]
    pub n_fat: u32,
    /// Stability sweep width: rates are recomputed for N2 .. N2 + sweep.
    #[serde(default)]
    pub n2_sweep: u32,
    #[serde(default = "default_k_range")]
    pub k_range: Vec<u32>,
    #[serde(default = "default_p_grid")]
    pub p_grid: Vec<f64>,
    #[serde(default = "default_bracket")]
    pub p_bracket: (f64, f64),
    #[serde(default = "default_tol_p")]
    pub tol_p: f64,
    #[serde(default = "default_tol")]
    pub solver_tol: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_threads")]
    pub threads: usize,
    #[serde(default = "default_horizon")]
    pub walk_horizon: usize,
    #[serde(default)]
    pub out_dir: Option<String>,
}

fn default_n1() -> u32 {
    0
}
fn default_n2() -> u32 {
    2
}
fn default_nfat() -> u32 {
    1
}
fn default_k_range() -> Vec<u32> {
    (1..=6).collect()
}
fn default_p_grid() -> Vec<f64> {
    vec![1.0, 1.5, 2.0, 3.0]
}
fn default_bracket() -> (f64, f64) {
    (1.0, 4.0)
}
fn default_tol_p() -> f64 {
    0.1
}
fn default_tol() -> f64 {
    1e-9
}
fn default_threads() -> usize {
    0
}
fn default_horizon() -> usize {
    1024
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n2 < self.n1 {
            return Err(crate::error::Error::InvalidParam(format!(
                "need N2 >= N1, got ({}, {})",
                self.n1, self.n2
            )));
        }
        if self.n_fat == 0 {
            return Err(crate::error::Error::InvalidParam("N must be >= 1".into()));
        }
        if self.k_range.len() < 3 {
            return Err(crate::error::Error::InvalidParam(
                "k range needs at least 3 entries".into(),
            ));
        }
        if self.p_bracket.0 >= self.p_bracket.1 {
            return Err(crate::error::Error::InvalidParam(
                "empty p bracket".into(),
            ));
        }
        Ok(())
    }

    pub fn hash(&self) -> String {
        let canonical = serde_json::to_string(self).expect("config serializes");
        let mut h = Sha256::new();
        h.update(canonical.as_bytes());
        let digest = h.finalize();
        let mut out = String::new();
        for b in digest.iter().take(8) {
            let _ = write!(out, "{b:02x}");
        }
        out
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct PkEntry {
    pub p: f64,
    pub k: u32,
    pub value: f64,
    pub certified: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct SpectralEntry {
    pub p: f64,
    pub d_upper: f64,
    pub d_lower: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct DimensionReport {
    pub tool_version: String,
    pub config: RunConfig,
    pub config_hash: String,
    pub framework: Option<FrameworkReport>,
    pub pk_table: Vec<PkEntry>,
    pub rates: Vec<(f64, RateEstimate)>,
    pub n_star: Option<RateEstimate>,
    pub tilted_n: Option<RateEstimate>,
    pub tilted_r: Option<RateEstimate>,
    pub arc: Option<ArcEstimate>,
    pub spectral: Vec<SpectralEntry>,
    /// One rate estimate per swept N2 for the stability report.
    pub n2_stability: Vec<(u32, f64)>,
    pub deep_gasket: Option<crate::families::gasket::DeepGasketReport>,
    pub notes: Vec<String>,
}

impl DimensionReport {
    pub fn new(config: RunConfig) -> DimensionReport {
        let config_hash = config.hash();
        DimensionReport {
            tool_version: TOOL_VERSION.into(),
            config,
            config_hash,
            framework: None,
            pk_table: Vec::new(),
            rates: Vec::new(),
            n_star: None,
            tilted_n: None,
            tilted_r: None,
            arc: None,
            spectral: Vec::new(),
            n2_stability: Vec::new(),
            deep_gasket: None,
            notes: Vec::new(),
        }
    }

    pub fn pk_csv(&self) -> String {
        let mut s = String::from("p,k,value,certified\n");
        for e in &self.pk_table {
            let _ = writeln!(s, "{},{},{:.12e},{}", e.p, e.k, e.value, e.certified);
        }
        s
    }
}

/// (x, y, series) rows for external plotting.
pub fn plot_csv(rows: &[(f64, f64, &str)]) -> String {
    let mut s = String::from("x,y,series\n");
    for (x, y, series) in rows {
        let _ = writeln!(s, "{x:.12e},{y:.12e},{series}");
    }
    s
}

pub fn heat_csv(p2n: &[f64]) -> String {
    let mut s = String::from("n,p2n\n");
    for (n, v) in p2n.iter().enumerate() {
        let _ = writeln!(s, "{n},{v:.15e}");
    }
    s
}

pub fn exit_csv(rows: &[(f64, f64, Option<f64>)]) -> String {
    let mut s = String::from("r,mean_exit,stderr\n");
    for (r, mean, se) in rows {
        match se {
            Some(se) => {
                let _ = writeln!(s, "{r},{mean:.12e},{se:.6e}");
            }
            None => {
                let _ = writeln!(s, "{r},{mean:.12e},");
            }
        }
    }
    s
}

pub fn metric_csv(rows: &[(u64, u64, f64)]) -> String {
    let mut s = String::from("x,y,distance\n");
    for (x, y, d) in rows {
        let _ = writeln!(s, "{x},{y},{d:.12e}");
    }
    s
}

pub fn write_text(dir: &Path, name: &str, content: &str) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    std::fs::write(dir.join(name), content)?;
    Ok(())
}

pub fn write_json<T: Serialize>(dir: &Path, name: &str, value: &T) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let text = serde_json::to_string_pretty(value)?;
    std::fs::write(dir.join(name), text)?;
    Ok(())
}

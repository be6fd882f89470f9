//! Deterministic generators for the built-in graph families, their partition
//! trees, and conductances.

pub mod boxes;
pub mod carpet;
pub mod dyadic;
pub mod gasket;

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// The level-type sequence f for the box and gasket families.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "arg", rename_all = "snake_case")]
pub enum FSpec {
    /// f(n) = c.
    Const(u32),
    /// f(n) = n.
    Identity,
    /// f(n) = floor(n / 2).
    HalfFloor,
    /// 0/1 sequence with f(n) = 1 iff l(l^2-1) < n <= l^3 for some l >= 1.
    CubePattern,
    /// Explicit values, indexed from n = 0 (box) or n = 1 (gasket).
    Explicit(Vec<u32>),
}

impl FSpec {
    pub fn eval(&self, n: u32) -> u32 {
        match self {
            FSpec::Const(c) => *c,
            FSpec::Identity => n,
            FSpec::HalfFloor => n / 2,
            FSpec::CubePattern => {
                let mut l = 1u64;
                let n = n as u64;
                loop {
                    let lo = l * (l * l - 1);
                    let hi = l * l * l;
                    if n <= lo {
                        return 0;
                    }
                    if n <= hi {
                        return 1;
                    }
                    l += 1;
                }
            }
            FSpec::Explicit(v) => v.get(n as usize).copied().unwrap_or(0),
        }
    }

    /// Parse "const:0", "id", "half", "pattern:l3", "explicit:0,1,0".
    pub fn parse(s: &str) -> Result<FSpec> {
        let s = s.trim();
        if s == "id" || s == "identity" {
            return Ok(FSpec::Identity);
        }
        if s == "half" {
            return Ok(FSpec::HalfFloor);
        }
        if s == "pattern:l3" || s == "l3" {
            return Ok(FSpec::CubePattern);
        }
        if let Some(c) = s.strip_prefix("const:") {
            return Ok(FSpec::Const(c.parse().map_err(|_| {
                Error::InvalidParam(format!("bad constant in f spec '{s}'"))
            })?));
        }
        if let Some(rest) = s.strip_prefix("explicit:") {
            let vals: std::result::Result<Vec<u32>, _> =
                rest.split(',').map(|t| t.trim().parse()).collect();
            return Ok(FSpec::Explicit(vals.map_err(|_| {
                Error::InvalidParam(format!("bad explicit f spec '{s}'"))
            })?));
        }
        Err(Error::InvalidParam(format!("unrecognized f spec '{s}'")))
    }
}

/// Family selector consumed by the CLI and the FFI layer.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FamilySpec {
    Dyadic { depth: u32 },
    Box { f: FSpec, depth: u32 },
    Gasket { f: FSpec, depth: u32 },
    Carpet { depth: u32 },
}

impl FamilySpec {
    pub fn name(&self) -> &'static str {
        match self {
            FamilySpec::Dyadic { .. } => "dyadic-halfline",
            FamilySpec::Box { .. } => "box",
            FamilySpec::Gasket { .. } => "gasket",
            FamilySpec::Carpet { .. } => "carpet",
        }
    }

    pub fn depth(&self) -> u32 {
        match self {
            FamilySpec::Dyadic { depth }
            | FamilySpec::Box { depth, .. }
            | FamilySpec::Gasket { depth, .. }
            | FamilySpec::Carpet { depth } => *depth,
        }
    }
}

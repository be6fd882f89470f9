//! Sampled certification of the basic-framework hypotheses: uniform
//! finiteness of scale sets, thickness, adaptedness of the metric, geometric
//! decay of cell weights, and the child-count bound. Every verdict carries
//! its sampling parameters; truncation yields "inconclusive", never a
//! refutation.

use crate::error::Result;
use crate::graph::{VIdx, Window};
use crate::metrics::Metric;
use crate::partition::{NodeId, NodeRef, PartitionTree, WeightFunction};
use serde::Serialize;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize)]
pub enum Verdict {
    Pass,
    Fail,
    Inconclusive,
}

#[derive(Debug, Clone, Serialize)]
pub struct UniformlyFiniteEntry {
    pub observed_max: usize,
    pub witness_height: Option<i32>,
    pub scales_tested: usize,
    pub cells_tested: usize,
    pub certified: bool,
}

/// sup over sampled (s, w) of #Lambda^g_{s,1}(w).
pub fn check_uniformly_finite(
    tree: &PartitionTree,
    g: &WeightFunction,
    s_grid: &[f64],
    per_scale_budget: usize,
) -> Result<UniformlyFiniteEntry> {
    let mut observed_max = 0usize;
    let mut witness_height = None;
    let mut cells_tested = 0usize;
    let mut certified = true;
    for &s in s_grid {
        let set = tree.scale_set(g, s);
        if set.truncated {
            certified = false;
        }
        let stride = (set.nodes.len() / per_scale_budget.max(1)).max(1);
        for &w in set.nodes.iter().step_by(stride) {
            if let Some((ball, trunc)) = tree.scale_neighborhood(g, s, w, 1) {
                cells_tested += 1;
                if trunc {
                    certified = false;
                }
                if ball.len() > observed_max {
                    observed_max = ball.len();
                    witness_height = Some(w.height());
                }
            }
        }
    }
    Ok(UniformlyFiniteEntry {
        observed_max,
        witness_height,
        scales_tested: s_grid.len(),
        cells_tested,
        certified,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct ThickEntry {
    /// min over sampled cells of the largest passing alpha on the grid.
    pub alpha: Option<f64>,
    pub cells_tested: usize,
    pub cells_inconclusive: usize,
    pub verdict: Verdict,
}

/// Thickness: for each sampled w, the largest grid alpha admitting a vertex
/// x in K_w with Lambda^g_{alpha g(pi(w)), 1}(x) inside the subtree of w.
pub fn check_thick(
    tree: &PartitionTree,
    g: &WeightFunction,
    alpha_grid: &[f64],
    per_level_budget: usize,
) -> Result<ThickEntry> {
    let (h_min, h_max) = tree.heights();
    let mut global_alpha: Option<f64> = None;
    let mut cells_tested = 0usize;
    let mut cells_inconclusive = 0usize;
    for h in (h_min + 1)..=h_max {
        let lv = match tree.level(h) {
            Some(l) => l,
            None => continue,
        };
        let idxs: Vec<u32> = (0..lv.len() as u32)
            .filter(|&i| lv.complete[i as usize] && lv.parent[i as usize] != crate::partition::NO_PARENT)
            .collect();
        let stride = (idxs.len() / per_level_budget.max(1)).max(1);
        for &i in idxs.iter().step_by(stride) {
            let id = NodeId { height: h, idx: i };
            let node = NodeRef::Te(id);
            let parent = match tree.parent(node) {
                Some(NodeRef::Te(p)) => p,
                _ => continue,
            };
            let g_parent = g.eval(tree, parent);
            cells_tested += 1;
            let mut best: Option<f64> = None;
            let mut saw_truncation = false;
            'alpha: for &alpha in alpha_grid {
                let s = alpha * g_parent;
                let cell: Vec<VIdx> = tree.cell(node).to_vec();
                for &x in &cell {
                    let (cells, trunc) = tree.lambda_s_m(g, x, s, 1);
                    if trunc {
                        saw_truncation = true;
                        continue;
                    }
                    // Empty neighborhood: U = {x} sits inside K_w vacuously.
                    let ok = cells.iter().all(|&c| tree.in_subtree(c, node));
                    if ok {
                        best = Some(alpha);
                        break 'alpha;
                    }
                }
            }
            match best {
                Some(a) => {
                    global_alpha = Some(match global_alpha {
                        None => a,
                        Some(b) => b.min(a),
                    });
                }
                None => {
                    if saw_truncation {
                        cells_inconclusive += 1;
                    } else {
                        return Ok(ThickEntry {
                            alpha: None,
                            cells_tested,
                            cells_inconclusive,
                            verdict: Verdict::Fail,
                        });
                    }
                }
            }
        }
    }
    let verdict = if global_alpha.is_some() {
        Verdict::Pass
    } else {
        Verdict::Inconclusive
    };
    Ok(ThickEntry {
        alpha: global_alpha,
        cells_tested,
        cells_inconclusive,
        verdict,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct AdaptedEntry {
    pub m: u32,
    pub alpha1: f64,
    pub alpha2: f64,
    pub samples: usize,
    pub verdict: Verdict,
}

/// Adaptedness of d: smallest M in the grid with finite
/// alpha1 = inf d(x, outside U)/r and alpha2 = sup d(x, U)/r over samples.
pub fn check_adapted(
    tree: &PartitionTree,
    g: &WeightFunction,
    d: &dyn Metric,
    window: &Window,
    m_grid: &[u32],
    centers: &[VIdx],
    r_grid: &[f64],
) -> Result<AdaptedEntry> {
    let n = window.graph.len();
    for &m in m_grid {
        let mut alpha1 = f64::INFINITY;
        let mut alpha2 = 0.0f64;
        let mut samples = 0usize;
        let mut ok = true;
        for &x in centers {
            for &r in r_grid {
                let (u_set, trunc) = tree.u_neighborhood(g, x, r, m);
                if trunc {
                    continue;
                }
                samples += 1;
                let inset: std::collections::HashSet<VIdx> = u_set.iter().copied().collect();
                for &y in &u_set {
                    if y != x {
                        alpha2 = alpha2.max(d.dist(x, y) / r);
                    }
                }
                let mut nearest_out = f64::INFINITY;
                for z in 0..n as VIdx {
                    if !inset.contains(&z) {
                        nearest_out = nearest_out.min(d.dist(x, z));
                    }
                }
                if nearest_out.is_finite() {
                    alpha1 = alpha1.min(nearest_out / r);
                }
                if alpha1 <= 0.0 {
                    ok = false;
                }
            }
        }
        if samples == 0 {
            continue;
        }
        if ok && alpha1.is_finite() && alpha1 > 0.0 {
            return Ok(AdaptedEntry {
                m,
                alpha1,
                alpha2,
                samples,
                verdict: Verdict::Pass,
            });
        }
    }
    Ok(AdaptedEntry {
        m: 0,
        alpha1: 0.0,
        alpha2: 0.0,
        samples: 0,
        verdict: Verdict::Inconclusive,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct GeometricEntry {
    /// Fitted ratio r with g_d(w) comparable to r^height.
    pub r: f64,
    /// Multiplicative spread of g_d / r^height over the sampled nodes.
    pub spread: f64,
    pub heights_used: usize,
    pub samples: usize,
}

/// Least-squares fit of log g(w) against height.
pub fn check_geometric_weights(
    tree: &PartitionTree,
    g: &WeightFunction,
    per_level_budget: usize,
) -> Result<GeometricEntry> {
    let (h_min, h_max) = tree.heights();
    let mut pts: Vec<(f64, f64)> = Vec::new();
    let mut heights_used = 0usize;
    for h in h_min..=h_max {
        let lv = match tree.level(h) {
            Some(l) => l,
            None => continue,
        };
        let idxs: Vec<u32> = (0..lv.len() as u32)
            .filter(|&i| lv.complete[i as usize])
            .collect();
        if idxs.is_empty() {
            continue;
        }
        heights_used += 1;
        let stride = (idxs.len() / per_level_budget.max(1)).max(1);
        for &i in idxs.iter().step_by(stride) {
            let v = g.eval(tree, NodeId { height: h, idx: i });
            if v > 0.0 {
                pts.push((h as f64, v.ln()));
            }
        }
    }
    if heights_used < 3 {
        return Err(crate::error::Error::InvalidParam(
            "geometric-weight fit needs at least 3 heights".into(),
        ));
    }
    let n = pts.len() as f64;
    let sx: f64 = pts.iter().map(|p| p.0).sum();
    let sy: f64 = pts.iter().map(|p| p.1).sum();
    let sxx: f64 = pts.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = pts.iter().map(|p| p.0 * p.1).sum();
    let slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    let r = slope.exp();
    let mut lo = f64::INFINITY;
    let mut hi = 0.0f64;
    for &(h, ln_g) in &pts {
        let ratio = (ln_g - slope * h).exp();
        lo = lo.min(ratio);
        hi = hi.max(ratio);
    }
    Ok(GeometricEntry {
        r,
        spread: hi / lo,
        heights_used,
        samples: pts.len(),
    })
}

/// sup #S(w) over stored non-edge nodes.
pub fn child_bound(tree: &PartitionTree) -> usize {
    let (h_min, h_max) = tree.heights();
    let mut best = 0usize;
    for h in h_min..=h_max {
        let lv = match tree.level(h) {
            Some(l) => l,
            None => continue,
        };
        for i in 0..lv.len() as u32 {
            let node = NodeRef::Te(NodeId { height: h, idx: i });
            if !lv.lambda_e[i as usize] {
                best = best.max(tree.children(node).len());
            }
        }
    }
    best
}

#[derive(Debug, Clone, Serialize)]
pub struct FrameworkReport {
    pub schema_version: u32,
    pub family: String,
    pub depth: u32,
    pub minimal: bool,
    pub connected: bool,
    pub uniformly_finite: UniformlyFiniteEntry,
    pub thick: ThickEntry,
    pub adapted: AdaptedEntry,
    pub geometric: GeometricEntry,
    pub child_bound: usize,
    pub s_grid: Vec<f64>,
    pub alpha_grid: Vec<f64>,
}

pub struct FrameworkConfig<'a> {
    pub s_grid: Vec<f64>,
    pub alpha_grid: Vec<f64>,
    pub m_grid: Vec<u32>,
    pub r_grid: Vec<f64>,
    pub centers: Vec<VIdx>,
    pub per_level_budget: usize,
    pub metric: &'a dyn Metric,
}

/// Geometric default grids: s ranging over the weight span with ratio 2,
/// 64 sampled cells per level.
pub fn default_s_grid(tree: &PartitionTree, g: &WeightFunction) -> Vec<f64> {
    let (h_min, h_max) = tree.heights();
    let lo = g.eval(
        tree,
        NodeId {
            height: h_max,
            idx: 0,
        },
    );
    let hi = g.eval(
        tree,
        NodeId {
            height: h_min,
            idx: 0,
        },
    );
    let (mut s, top) = (lo.max(1e-12), hi);
    let mut grid = Vec::new();
    while s < top {
        grid.push(s);
        s *= 2.0;
    }
    grid
}

pub fn run_framework_checks(
    tree: &PartitionTree,
    window: &Window,
    g: &WeightFunction,
    cfg: &FrameworkConfig,
) -> Result<FrameworkReport> {
    let part = tree.verify(window);
    let uf = check_uniformly_finite(tree, g, &cfg.s_grid, cfg.per_level_budget)?;
    let thick = check_thick(tree, g, &cfg.alpha_grid, cfg.per_level_budget)?;
    let adapted = check_adapted(
        tree,
        g,
        cfg.metric,
        window,
        &cfg.m_grid,
        &cfg.centers,
        &cfg.r_grid,
    )?;
    let geometric = check_geometric_weights(tree, g, cfg.per_level_budget)?;
    Ok(FrameworkReport {
        schema_version: SCHEMA_VERSION,
        family: window.provenance.family.clone(),
        depth: window.provenance.depth,
        minimal: part.minimal.pass,
        connected: part.connected.pass,
        uniformly_finite: uf,
        thick,
        adapted,
        geometric,
        child_bound: child_bound(tree),
        s_grid: cfg.s_grid.clone(),
        alpha_grid: cfg.alpha_grid.clone(),
    })
}

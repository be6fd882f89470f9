//! Discrete p-energies on horizontal networks: the Dirichlet instances
//! around a cell, their minimization (exact linear solve at p = 2, IRLS with
//! annealed regularization otherwise), level suprema, growth-rate fits,
//! tilted rates along ancestor lines, the p-spectral dimension formula, and
//! the conformal-dimension bisection.

use crate::error::{Error, Result};
use crate::partition::{NodeRef, PartitionTree};
use crate::solve::{weighted_p_energy, DirichletProblem};
use serde::Serialize;
use std::collections::{HashMap, HashSet, VecDeque};

/// Neighborhood parameters (N1, N2, N) of the energy definition.
#[derive(Debug, Clone, Copy, Serialize, PartialEq)]
pub struct EnergyParams {
    pub n1: u32,
    pub n2: u32,
    pub n_fat: u32,
}

impl EnergyParams {
    pub fn new(n1: u32, n2: u32, n_fat: u32) -> Result<EnergyParams> {
        if n2 < n1 {
            return Err(Error::InvalidParam(format!("need N2 >= N1, got ({n1}, {n2})")));
        }
        if n_fat == 0 {
            return Err(Error::InvalidParam("N must be >= 1".into()));
        }
        Ok(EnergyParams { n1, n2, n_fat })
    }
}

/// A concrete p-Dirichlet instance: nodes of S^k(Gamma_{N2}(w)), sources
/// pinned to 1, everything outside pinned to 0 (represented by per-node
/// multiplicities toward a virtual ground).
#[derive(Debug, Clone)]
pub struct EnergyProblem {
    pub level: i32,
    pub nodes: Vec<NodeRef>,
    pub source: Vec<bool>,
    /// Unit-weight fattened pairs inside the node set, u < v.
    pub edges: Vec<(u32, u32)>,
    /// Number of J^h_N partners outside the node set, per node.
    pub ground_weight: Vec<f64>,
    pub p: f64,
    pub certified: bool,
}

#[derive(Debug, Clone)]
pub struct EnergyResult {
    pub value: f64,
    pub minimizer: Vec<f64>,
    pub iterations: usize,
    pub residual: f64,
    pub certified: bool,
    pub converged: bool,
}

/// Build the instance for E_{p,k,w}(N1, N2, N).
pub fn build_energy_problem(
    tree: &PartitionTree,
    w: NodeRef,
    k: u32,
    p: f64,
    params: EnergyParams,
) -> Result<EnergyProblem> {
    if p < 1.0 {
        return Err(Error::InvalidParam(format!("p must be >= 1, got {p}")));
    }
    let g1 = tree.gamma_ball(w, params.n1);
    let g2 = tree.gamma_ball(w, params.n2);
    let mut certified = !g1.truncated && !g2.truncated;

    let mut in_set: HashSet<NodeRef> = HashSet::new();
    for &v in &g2.nodes {
        for d in tree.descendants(v, k) {
            in_set.insert(d);
        }
    }
    let mut src_set: HashSet<NodeRef> = HashSet::new();
    for &v in &g1.nodes {
        for d in tree.descendants(v, k) {
            src_set.insert(d);
        }
    }
    let mut nodes: Vec<NodeRef> = in_set.iter().copied().collect();
    nodes.sort_unstable();
    let index: HashMap<NodeRef, u32> = nodes
        .iter()
        .enumerate()
        .map(|(i, &n)| (n, i as u32))
        .collect();

    let mut edges: Vec<(u32, u32)> = Vec::new();
    let mut ground_weight = vec![0.0; nodes.len()];
    for (i, &u) in nodes.iter().enumerate() {
        if !tree.is_complete(u) {
            certified = false;
        }
        // All nodes at J^h distance in (0, N] from u.
        let mut dist: HashMap<NodeRef, u32> = HashMap::new();
        dist.insert(u, 0);
        let mut queue = VecDeque::new();
        queue.push_back(u);
        while let Some(a) = queue.pop_front() {
            let da = dist[&a];
            if da >= params.n_fat {
                continue;
            }
            for b in tree.h_neighbors(a) {
                if let std::collections::hash_map::Entry::Vacant(e) = dist.entry(b) {
                    e.insert(da + 1);
                    if !tree.is_complete(b) {
                        certified = false;
                    }
                    queue.push_back(b);
                }
            }
        }
        for (&x, &d) in &dist {
            if d == 0 {
                continue;
            }
            match index.get(&x) {
                Some(&j) => {
                    if (i as u32) < j {
                        edges.push((i as u32, j));
                    }
                }
                None => ground_weight[i] += 1.0,
            }
        }
    }
    edges.sort_unstable();

    let source: Vec<bool> = nodes.iter().map(|n| src_set.contains(n)).collect();
    Ok(EnergyProblem {
        level: w.height() + k as i32,
        nodes,
        source,
        edges,
        ground_weight,
        p,
        certified,
    })
}

impl EnergyProblem {
    /// Weighted edge list including the virtual ground node (index n).
    pub fn weighted_edges(&self) -> (usize, Vec<(u32, u32, f64)>) {
        let n = self.nodes.len();
        let mut out: Vec<(u32, u32, f64)> = self
            .edges
            .iter()
            .map(|&(u, v)| (u, v, 1.0))
            .collect();
        for (i, &g) in self.ground_weight.iter().enumerate() {
            if g > 0.0 {
                out.push((i as u32, n as u32, g));
            }
        }
        (n + 1, out)
    }

    pub fn pinned(&self) -> Vec<Option<f64>> {
        let n = self.nodes.len();
        let mut pinned: Vec<Option<f64>> = (0..n)
            .map(|i| if self.source[i] { Some(1.0) } else { None })
            .collect();
        pinned.push(Some(0.0)); // ground
        pinned
    }
}

/// Minimize sum w_e |f_u - f_v|^p over the weighted edge list with pinned
/// values. Returns the minimizer over all nodes.
pub fn minimize_weighted_p(
    n: usize,
    edges: &[(u32, u32, f64)],
    pinned: &[Option<f64>],
    p: f64,
    tol: f64,
    max_iter: usize,
) -> Result<EnergyResult> {
    if p < 1.0 {
        return Err(Error::InvalidParam(format!("p must be >= 1, got {p}")));
    }
    let has_free = pinned.iter().any(|b| b.is_none());
    let lo = pinned
        .iter()
        .flatten()
        .fold(f64::INFINITY, |a, &b| a.min(b));
    let hi = pinned
        .iter()
        .flatten()
        .fold(f64::NEG_INFINITY, |a, &b| a.max(b));
    let clamp = |values: &mut [f64]| {
        for (i, v) in values.iter_mut().enumerate() {
            if pinned[i].is_none() {
                *v = v.clamp(lo, hi);
            }
        }
    };

    if p == 2.0 {
        let sol = DirichletProblem {
            n,
            edges,
            boundary: pinned,
            rhs_extra: None,
        }
        .solve(tol.min(1e-12), max_iter.max(4 * n + 100), None)?;
        let mut values = sol.values;
        if has_free {
            clamp(&mut values);
        }
        let value = weighted_p_energy(&values, edges, 2.0);
        return Ok(EnergyResult {
            value,
            minimizer: values,
            iterations: sol.iterations,
            residual: sol.residual,
            certified: true,
            converged: sol.converged,
        });
    }

    // IRLS with annealed regularization: at fixed eps minimize the smoothed
    // energy sum w (df^2 + eps^2)^{p/2}; each step solves the weighted
    // quadratic surrogate and backtracks along the segment, which is a
    // descent direction for the smoothed energy at every p >= 1.
    let scale: f64 = pinned
        .iter()
        .flatten()
        .fold(0.0f64, |a, &b| a.max(b.abs()))
        .max(1.0);
    let smoothed = |values: &[f64], eps: f64| -> f64 {
        edges
            .iter()
            .map(|&(u, v, w)| {
                let d = values[u as usize] - values[v as usize];
                w * (d * d + eps * eps).powf(p / 2.0)
            })
            .sum()
    };

    let mut values: Vec<f64> = pinned.iter().map(|b| b.unwrap_or(0.5 * (lo + hi))).collect();
    let mut total_iters = 0usize;
    let mut last_rel = f64::INFINITY;
    let mut eps = 1e-2 * scale;
    let eps_floor = 1e-8 * scale;
    let mut converged = true;
    while eps >= eps_floor * 0.999 {
        let mut inner = 0usize;
        loop {
            let e_cur = smoothed(&values, eps);
            let irls_edges: Vec<(u32, u32, f64)> = edges
                .iter()
                .map(|&(u, v, w)| {
                    let d = values[u as usize] - values[v as usize];
                    (u, v, w * (d * d + eps * eps).powf((p - 2.0) / 2.0))
                })
                .collect();
            let sol = DirichletProblem {
                n,
                edges: &irls_edges,
                boundary: pinned,
                rhs_extra: None,
            }
            .solve(1e-10, 4 * n + 100, Some(&values))?;
            total_iters += 1;

            // Backtracking toward the surrogate minimizer, clamped.
            let mut accepted = false;
            let mut t = 1.0;
            for _ in 0..40 {
                let mut cand: Vec<f64> = values
                    .iter()
                    .zip(&sol.values)
                    .map(|(&a, &b)| a + t * (b - a))
                    .collect();
                clamp(&mut cand);
                let e_cand = smoothed(&cand, eps);
                if e_cand < e_cur {
                    last_rel = (e_cur - e_cand) / e_cur.max(1e-300);
                    values = cand;
                    accepted = true;
                    break;
                }
                t *= 0.5;
            }
            inner += 1;
            if !accepted || last_rel < tol * 0.1 || inner >= 60 {
                break;
            }
            if total_iters >= max_iter {
                converged = false;
                break;
            }
        }
        if total_iters >= max_iter && eps > eps_floor {
            converged = false;
            break;
        }
        eps *= 0.1;
    }

    let value = weighted_p_energy(&values, edges, p);
    Ok(EnergyResult {
        value,
        minimizer: values,
        iterations: total_iters,
        residual: last_rel,
        certified: true,
        converged,
    })
}

/// Solve a built instance. A vacuous sink (no ground partners anywhere)
/// yields the constant-1 minimizer with zero energy; a source cut off from
/// ground likewise relaxes to a flat block.
pub fn solve_penergy(prob: &EnergyProblem, tol: f64, max_iter: usize) -> Result<EnergyResult> {
    if prob.ground_weight.iter().all(|&g| g == 0.0) {
        return Ok(EnergyResult {
            value: 0.0,
            minimizer: vec![1.0; prob.nodes.len()],
            iterations: 0,
            residual: 0.0,
            certified: prob.certified,
            converged: true,
        });
    }
    let (n, edges) = prob.weighted_edges();
    let pinned = prob.pinned();
    let mut res = minimize_weighted_p(n, &edges, &pinned, prob.p, tol, max_iter)?;
    res.minimizer.pop(); // drop the ground node
    res.certified = prob.certified;
    Ok(res)
}

/// E_{p,k,w}: build and solve in one step.
pub fn energy_pkw(
    tree: &PartitionTree,
    w: NodeRef,
    k: u32,
    p: f64,
    params: EnergyParams,
    tol: f64,
) -> Result<EnergyResult> {
    let prob = build_energy_problem(tree, w, k, p, params)?;
    solve_penergy(&prob, tol, 200)
}

/// Which cells to take the level supremum over.
#[derive(Debug, Clone)]
pub enum CellSampler {
    /// All certified stored cells, capped per height by stride sampling.
    Certified { per_level_cap: usize },
    /// An explicit list of base cells.
    Explicit(Vec<NodeRef>),
}

impl CellSampler {
    pub fn cells(&self, tree: &PartitionTree) -> Vec<NodeRef> {
        match self {
            CellSampler::Explicit(v) => v.clone(),
            CellSampler::Certified { per_level_cap } => {
                let (h_min, h_max) = tree.heights();
                let mut out = Vec::new();
                for h in h_min..=h_max {
                    let lv = match tree.level(h) {
                        Some(l) => l,
                        None => continue,
                    };
                    let idxs: Vec<u32> =
                        (0..lv.len() as u32).filter(|&i| lv.complete[i as usize]).collect();
                    let stride = (idxs.len() / (*per_level_cap).max(1)).max(1);
                    for (pos, &i) in idxs.iter().enumerate() {
                        if pos % stride == 0 {
                            out.push(NodeRef::Te(crate::partition::NodeId { height: h, idx: i }));
                        }
                    }
                }
                out
            }
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SupEntry {
    pub k: u32,
    pub value: f64,
    pub certified: bool,
    #[serde(skip)]
    pub witness: Option<NodeRef>,
}

/// sup_w E_{p,k,w} over sampled cells. Only cells whose (N2+N)-dependency
/// cone is certified contribute certified values; if no cell qualifies the
/// supremum is an error.
pub fn energy_pk_sup(
    tree: &PartitionTree,
    k: u32,
    p: f64,
    params: EnergyParams,
    sampler: &CellSampler,
    tol: f64,
) -> Result<SupEntry> {
    let cells = sampler.cells(tree);
    if cells.is_empty() {
        return Err(Error::NoCertifiedCells);
    }
    let mut best: Option<(f64, NodeRef, bool)> = None;
    for w in cells {
        let prob = build_energy_problem(tree, w, k, p, params)?;
        if !prob.certified {
            continue;
        }
        let res = solve_penergy(&prob, tol, 200)?;
        let cand = (res.value, w, res.certified && res.converged);
        best = match best {
            None => Some(cand),
            Some(b) if cand.0 > b.0 => Some(cand),
            b => b,
        };
    }
    match best {
        None => Err(Error::NoCertifiedCells),
        Some((value, witness, certified)) => Ok(SupEntry {
            k,
            value,
            certified,
            witness: Some(witness),
        }),
    }
}

/// A growth-rate estimate from a k-sweep: last-point value, log-linear fit,
/// and their disagreement as a truncation diagnostic.
#[derive(Debug, Clone, Serialize)]
pub struct RateEstimate {
    pub per_k: Vec<SupEntry>,
    pub rate_fit: f64,
    pub rate_last: f64,
    pub uncertainty: f64,
    pub certified: bool,
}

fn fit_log_slope(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    let sx: f64 = points.iter().map(|p| p.0).sum();
    let sy: f64 = points.iter().map(|p| p.1).sum();
    let sxx: f64 = points.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = points.iter().map(|p| p.0 * p.1).sum();
    (n * sxy - sx * sy) / (n * sxx - sx * sx)
}

fn rate_from_entries(per_k: Vec<SupEntry>) -> Result<RateEstimate> {
    if per_k.len() < 3 {
        return Err(Error::InvalidParam(
            "rate estimation needs at least 3 k values".into(),
        ));
    }
    let pts: Vec<(f64, f64)> = per_k
        .iter()
        .map(|e| (e.k as f64, e.value.max(1e-300).ln()))
        .collect();
    let rate_fit = fit_log_slope(&pts).exp();
    let last = per_k.last().unwrap();
    let rate_last = last.value.max(1e-300).powf(1.0 / last.k as f64);
    let certified = per_k.iter().all(|e| e.certified);
    Ok(RateEstimate {
        uncertainty: (rate_fit - rate_last).abs(),
        per_k,
        rate_fit,
        rate_last,
        certified,
    })
}

/// R_p estimate: trend of E_{p,k}^{1/k} over the k range.
pub fn rate_rp(
    tree: &PartitionTree,
    p: f64,
    k_range: &[u32],
    params: EnergyParams,
    sampler: &CellSampler,
    tol: f64,
) -> Result<RateEstimate> {
    let mut per_k = Vec::new();
    for &k in k_range {
        per_k.push(energy_pk_sup(tree, k, p, params, sampler, tol)?);
    }
    rate_from_entries(per_k)
}

/// N_* estimate: trend of sup_w #S^k(w)^{1/k}.
pub fn n_star(tree: &PartitionTree, k_range: &[u32], sampler: &CellSampler) -> Result<RateEstimate> {
    let cells = sampler.cells(tree);
    if cells.is_empty() {
        return Err(Error::NoCertifiedCells);
    }
    let mut per_k = Vec::new();
    for &k in k_range {
        let mut best = 0u64;
        let mut witness = None;
        for &w in &cells {
            let c = tree.descendant_count(w, k);
            if c > best {
                best = c;
                witness = Some(w);
            }
        }
        per_k.push(SupEntry {
            k,
            value: best as f64,
            certified: true,
            witness,
        });
    }
    rate_from_entries(per_k)
}

/// Tilted rates along the ancestor line of a base cell: the energy
/// E_{p,k,pi^k(w)} and branching #S^k(pi^k(w)) as functions of k.
pub fn tilted_rates(
    tree: &PartitionTree,
    base: NodeRef,
    p: f64,
    k_range: &[u32],
    params: EnergyParams,
    tol: f64,
) -> Result<(RateEstimate, RateEstimate)> {
    let mut count_entries = Vec::new();
    let mut energy_entries = Vec::new();
    for &k in k_range {
        let mut anc = base;
        for _ in 0..k {
            anc = tree
                .parent(anc)
                .ok_or_else(|| Error::Truncated(format!("window too shallow above base cell for k = {k}")))?;
        }
        let cnt = tree.descendant_count(anc, k);
        count_entries.push(SupEntry {
            k,
            value: cnt as f64,
            certified: true,
            witness: Some(anc),
        });
        let res = energy_pkw(tree, anc, k, p, params, tol)?;
        energy_entries.push(SupEntry {
            k,
            value: res.value,
            certified: res.certified && res.converged,
            witness: Some(anc),
        });
    }
    Ok((
        rate_from_entries(count_entries)?,
        rate_from_entries(energy_entries)?,
    ))
}

/// p log N / (log N - log R), with the dichotomy of the main theorem
/// asserted at formula level.
pub fn spectral_dim_p(n_rate: f64, r_rate: f64, p: f64) -> Result<f64> {
    if !(n_rate > 1.0) {
        return Err(Error::InvalidParam(format!(
            "branching rate must exceed 1, got {n_rate}"
        )));
    }
    let denom = n_rate.ln() - r_rate.ln();
    if denom <= 0.0 {
        return Err(Error::DegenerateRates(denom));
    }
    let d = p * n_rate.ln() / denom;
    debug_assert!(
        (r_rate < 1.0) == (d < p) || r_rate == 1.0,
        "dichotomy violated: r_rate = {r_rate}, d = {d}, p = {p}"
    );
    Ok(d)
}

#[derive(Debug, Clone, Serialize)]
pub struct BisectionStep {
    pub p: f64,
    pub rate_fit: f64,
    pub decays: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct ArcEstimate {
    pub bracket: (f64, f64),
    pub estimate: f64,
    pub trace: Vec<BisectionStep>,
    pub certified: bool,
    /// log-rate margin used as the decay predicate.
    pub eta: f64,
}

/// Bisect for the p where the fitted rate crosses 1 (within margin eta).
/// Requires the lower endpoint not to decay and the upper endpoint to decay.
pub fn arc_dim_estimate(
    tree: &PartitionTree,
    p_bracket: (f64, f64),
    k_range: &[u32],
    params: EnergyParams,
    sampler: &CellSampler,
    tol_p: f64,
    tol: f64,
) -> Result<ArcEstimate> {
    let eta = 0.02;
    let mut trace = Vec::new();
    let mut certified = true;
    let eval = |p: f64, trace: &mut Vec<BisectionStep>, certified: &mut bool| -> Result<bool> {
        let est = rate_rp(tree, p, k_range, params, sampler, tol)?;
        if !est.certified {
            *certified = false;
        }
        let decays = est.rate_fit.ln() < -eta;
        trace.push(BisectionStep {
            p,
            rate_fit: est.rate_fit,
            decays,
        });
        Ok(decays)
    };
    let (mut lo, mut hi) = p_bracket;
    if lo < 1.0 {
        lo = 1.0;
    }
    let lo_decays = eval(lo, &mut trace, &mut certified)?;
    let hi_decays = eval(hi, &mut trace, &mut certified)?;
    if lo_decays || !hi_decays {
        return Err(Error::BracketInvalid {
            p_lo: lo,
            p_hi: hi,
            r_lo: trace[0].rate_fit,
            r_hi: trace[1].rate_fit,
        });
    }
    while hi - lo > tol_p {
        let mid = 0.5 * (lo + hi);
        if eval(mid, &mut trace, &mut certified)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(ArcEstimate {
        bracket: (lo, hi),
        estimate: 0.5 * (lo + hi),
        trace,
        certified,
        eta,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::families::dyadic::dyadic_halfline;
    use crate::partition::NodeId;

    fn interior_lambda_cell(_tree: &PartitionTree, idx: u32) -> NodeRef {
        NodeRef::Te(NodeId { height: 0, idx })
    }

    #[test]
    fn single_edge_any_p_value_one() {
        // Two nodes, one edge, endpoints pinned 1 and 0.
        for p in [1.0, 1.5, 2.0, 3.0] {
            let res = minimize_weighted_p(
                2,
                &[(0, 1, 1.0)],
                &[Some(1.0), Some(0.0)],
                p,
                1e-10,
                200,
            )
            .unwrap();
            assert!((res.value - 1.0).abs() < 1e-12, "p = {p}");
        }
    }

    #[test]
    fn three_edge_path_p2_closed_form() {
        let edges = vec![(0u32, 1u32, 1.0), (1, 2, 1.0), (2, 3, 1.0)];
        let pinned = vec![Some(1.0), None, None, Some(0.0)];
        let res = minimize_weighted_p(4, &edges, &pinned, 2.0, 1e-12, 500).unwrap();
        assert!((res.value - 1.0 / 3.0).abs() < 1e-10);
        let expect = [1.0, 2.0 / 3.0, 1.0 / 3.0, 0.0];
        for (a, b) in res.minimizer.iter().zip(expect) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn path_energy_matches_equal_increment_formula_for_general_p() {
        // Pinned 1/0 across m steps: optimum m^(1-p) by convexity.
        for p in [1.3, 1.5, 3.0] {
            let m = 5u32;
            let edges: Vec<(u32, u32, f64)> = (0..m).map(|i| (i, i + 1, 1.0)).collect();
            let mut pinned = vec![None; (m + 1) as usize];
            pinned[0] = Some(1.0);
            pinned[m as usize] = Some(0.0);
            let res = minimize_weighted_p((m + 1) as usize, &edges, &pinned, p, 1e-10, 400).unwrap();
            let expect = (m as f64).powf(1.0 - p);
            assert!(
                (res.value - expect).abs() / expect < 1e-6,
                "p = {p}: {} vs {expect}",
                res.value
            );
        }
    }

    #[test]
    fn vacuous_sink_gives_zero_energy() {
        // Tiny window: N2 large enough that Gamma_{N2} covers the whole level.
        let (_w, t) = dyadic_halfline(2).unwrap();
        let w = interior_lambda_cell(&t, 1);
        let prob = build_energy_problem(&t, w, 1, 2.0, EnergyParams::new(0, 16, 1).unwrap()).unwrap();
        assert!(prob.ground_weight.iter().all(|&g| g == 0.0));
        let res = solve_penergy(&prob, 1e-10, 100).unwrap();
        assert_eq!(res.value, 0.0);
        assert!(res.minimizer.iter().all(|&v| v == 1.0));
    }

    #[test]
    fn dyadic_energy_matches_side_ramp_formula() {
        // E_{p,k,w}(0,2,1) = 2 (2 * 2^k + 1)^(1-p) on interior cells.
        let (_w, t) = dyadic_halfline(6).unwrap();
        let w = interior_lambda_cell(&t, 31);
        let params = EnergyParams::new(0, 2, 1).unwrap();
        for (k, p) in [(2u32, 2.0), (3, 2.0), (3, 1.5), (2, 3.0)] {
            let res = energy_pkw(&t, w, k, p, params, 1e-9).unwrap();
            assert!(res.certified, "k={k} p={p}");
            let m = 2.0 * (1u64 << k) as f64 + 1.0;
            let expect = 2.0 * m.powf(1.0 - p);
            assert!(
                (res.value - expect).abs() / expect < 1e-5,
                "k={k} p={p}: {} vs {expect}",
                res.value
            );
        }
    }

    #[test]
    fn maximum_principle_holds() {
        let (_w, t) = dyadic_halfline(6).unwrap();
        let w = interior_lambda_cell(&t, 31);
        let params = EnergyParams::new(0, 2, 1).unwrap();
        for p in [1.0, 1.5, 2.0, 3.0] {
            let res = energy_pkw(&t, w, 3, p, params, 1e-9).unwrap();
            assert!(res
                .minimizer
                .iter()
                .all(|&v| (-1e-12..=1.0 + 1e-12).contains(&v)));
        }
    }

    #[test]
    fn energy_monotone_in_n1_and_n2() {
        let (_w, t) = dyadic_halfline(7).unwrap();
        let w = interior_lambda_cell(&t, 63);
        let v_base = energy_pkw(&t, w, 3, 2.0, EnergyParams::new(0, 2, 1).unwrap(), 1e-10)
            .unwrap()
            .value;
        let v_wider_sink = energy_pkw(&t, w, 3, 2.0, EnergyParams::new(0, 3, 1).unwrap(), 1e-10)
            .unwrap()
            .value;
        let v_bigger_src = energy_pkw(&t, w, 3, 2.0, EnergyParams::new(1, 3, 1).unwrap(), 1e-10)
            .unwrap()
            .value;
        assert!(v_wider_sink <= v_base + 1e-12);
        assert!(v_bigger_src >= v_wider_sink - 1e-12);
    }

    #[test]
    fn dyadic_rates_approach_two_to_one_minus_p() {
        let (_w, t) = dyadic_halfline(8).unwrap();
        let sampler = CellSampler::Certified { per_level_cap: 16 };
        let ks: Vec<u32> = (3..=8).collect();
        for p in [1.0, 1.5, 2.0, 3.0] {
            let est = rate_rp(&t, p, &ks, EnergyParams::new(0, 2, 1).unwrap(), &sampler, 1e-9).unwrap();
            let expect = 2f64.powf(1.0 - p);
            assert!(
                (est.rate_fit - expect).abs() / expect < 0.05,
                "p = {p}: fit {} vs {expect}",
                est.rate_fit
            );
        }
    }

    #[test]
    fn dyadic_n_star_is_two() {
        let (_w, t) = dyadic_halfline(6).unwrap();
        let sampler = CellSampler::Certified { per_level_cap: 8 };
        let est = n_star(&t, &[1, 2, 3, 4], &sampler).unwrap();
        assert!((est.rate_fit - 2.0).abs() < 1e-9);
        assert!((est.rate_last - 2.0).abs() < 1e-9);
    }

    #[test]
    fn spectral_formula_and_dichotomy() {
        // r_rate = 1 gives exactly p.
        assert!((spectral_dim_p(2.0, 1.0, 1.7).unwrap() - 1.7).abs() < 1e-12);
        // dyadic: N = 2, R_2 = 1/2 -> d^S_2 = 1.
        assert!((spectral_dim_p(2.0, 0.5, 2.0).unwrap() - 1.0).abs() < 1e-12);
        assert!(spectral_dim_p(0.9, 0.5, 2.0).is_err());
        assert!(spectral_dim_p(2.0, 4.0, 2.0).is_err());
    }

    #[test]
    fn dyadic_arc_bisection_brackets_one() {
        let (_w, t) = dyadic_halfline(8).unwrap();
        let sampler = CellSampler::Certified { per_level_cap: 8 };
        let ks: Vec<u32> = (1..=6).collect();
        let est = arc_dim_estimate(
            &t,
            (1.0, 3.0),
            &ks,
            EnergyParams::new(0, 2, 1).unwrap(),
            &sampler,
            0.05,
            1e-9,
        )
        .unwrap();
        assert!(est.bracket.0 <= 1.0 + 1e-12 && 1.0 <= est.bracket.1);
        assert!((est.estimate - 1.0).abs() <= 0.05, "estimate {}", est.estimate);
    }

    #[test]
    fn tilted_equals_plain_on_translation_invariant_family() {
        let (_w, t) = dyadic_halfline(8).unwrap();
        let base = interior_lambda_cell(&t, 127);
        let params = EnergyParams::new(0, 2, 1).unwrap();
        let ks: Vec<u32> = (1..=5).collect();
        let (nrate, erate) = tilted_rates(&t, base, 2.0, &ks, params, 1e-9).unwrap();
        assert!((nrate.rate_fit - 2.0).abs() < 1e-9);
        let sampler = CellSampler::Certified { per_level_cap: 8 };
        let plain = rate_rp(&t, 2.0, &ks, params, &sampler, 1e-9).unwrap();
        assert!(
            (erate.rate_fit - plain.rate_fit).abs() < 0.02,
            "tilted {} plain {}",
            erate.rate_fit,
            plain.rate_fit
        );
    }
}

//! Metrics on graph windows: graph metric, geometric metrics from stored
//! coordinates, resistance metric, fitting-condition checks, weight
//! functions from metrics, and chain metrization of quasi-metrics.

use crate::error::{Error, Result};
use crate::graph::{VIdx, Window};
use crate::partition::{PartitionTree, WeightFunction};
use crate::resistance::ResistanceNetwork;
use serde::Serialize;
use std::collections::{BinaryHeap, BTreeMap, HashMap, HashSet, VecDeque};
use std::sync::{Arc, Mutex};

pub trait Metric: Sync {
    fn dist(&self, x: VIdx, y: VIdx) -> f64;
    fn kind(&self) -> &'static str;
}

/// Shortest-path metric with per-source BFS caching.
pub struct GraphMetric<'a> {
    window: &'a Window,
    cache: Mutex<HashMap<VIdx, Arc<Vec<u32>>>>,
}

impl<'a> GraphMetric<'a> {
    pub fn new(window: &'a Window) -> Self {
        GraphMetric {
            window,
            cache: Mutex::new(HashMap::new()),
        }
    }

    pub fn distances_from(&self, x: VIdx) -> Arc<Vec<u32>> {
        let mut cache = self.cache.lock().unwrap();
        cache
            .entry(x)
            .or_insert_with(|| Arc::new(self.window.graph.bfs_distances(x)))
            .clone()
    }
}

impl Metric for GraphMetric<'_> {
    fn dist(&self, x: VIdx, y: VIdx) -> f64 {
        let d = self.distances_from(x)[y as usize];
        if d == u32::MAX {
            f64::INFINITY
        } else {
            d as f64
        }
    }
    fn kind(&self) -> &'static str {
        "graph-metric"
    }
}

/// Quadratic-form metric over stored integer coordinates:
/// scale * sqrt(a dx^2 + b dx dy + c dy^2).
pub struct EuclideanMetric<'a> {
    window: &'a Window,
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub scale: f64,
}

impl<'a> EuclideanMetric<'a> {
    pub fn plane(window: &'a Window) -> Self {
        EuclideanMetric {
            window,
            a: 1.0,
            b: 0.0,
            c: 1.0,
            scale: 1.0,
        }
    }

    /// For coordinates (p, q) representing (p + q sqrt(3) i) / 2.
    pub fn triangular(window: &'a Window) -> Self {
        EuclideanMetric {
            window,
            a: 1.0,
            b: 0.0,
            c: 3.0,
            scale: 0.5,
        }
    }
}

impl Metric for EuclideanMetric<'_> {
    fn dist(&self, x: VIdx, y: VIdx) -> f64 {
        let (x1, y1) = self.window.graph.coord(x).expect("metric requires coordinates");
        let (x2, y2) = self.window.graph.coord(y).expect("metric requires coordinates");
        let dx = (x1 - x2) as f64;
        let dy = (y1 - y2) as f64;
        self.scale * (self.a * dx * dx + self.b * dx * dy + self.c * dy * dy).sqrt()
    }
    fn kind(&self) -> &'static str {
        "euclidean"
    }
}

/// Effective-resistance metric R(x, y), with cached pseudo-inverse columns.
pub struct ResistanceMetric<'a> {
    net: &'a ResistanceNetwork,
    columns: Mutex<HashMap<VIdx, Arc<Vec<f64>>>>,
}

impl<'a> ResistanceMetric<'a> {
    pub fn new(net: &'a ResistanceNetwork) -> Self {
        ResistanceMetric {
            net,
            columns: Mutex::new(HashMap::new()),
        }
    }

    fn column(&self, x: VIdx) -> Result<Arc<Vec<f64>>> {
        {
            let cols = self.columns.lock().unwrap();
            if let Some(c) = cols.get(&x) {
                return Ok(c.clone());
            }
        }
        let col = Arc::new(self.net.pseudo_inverse_column(x)?);
        self.columns.lock().unwrap().insert(x, col.clone());
        Ok(col)
    }

    pub fn resistance(&self, x: VIdx, y: VIdx) -> Result<f64> {
        if x == y {
            return Ok(0.0);
        }
        let cx = self.column(x)?;
        let cy = self.column(y)?;
        Ok(cx[x as usize] + cy[y as usize] - 2.0 * cx[y as usize])
    }
}

impl Metric for ResistanceMetric<'_> {
    fn dist(&self, x: VIdx, y: VIdx) -> f64 {
        self.resistance(x, y).unwrap_or(f64::INFINITY)
    }
    fn kind(&self) -> &'static str {
        "resistance"
    }
}

/// Metric realized as a shortest-path table (output of chain metrization).
pub struct ChainMetric {
    pub dist: Vec<Vec<f64>>,
}

impl Metric for ChainMetric {
    fn dist(&self, x: VIdx, y: VIdx) -> f64 {
        self.dist[x as usize][y as usize]
    }
    fn kind(&self) -> &'static str {
        "chain-metrized"
    }
}

/// Sampled metric-axiom check: symmetry, identity, triangle inequality.
pub fn assert_metric_axioms(d: &dyn Metric, vertices: &[VIdx], budget: usize) -> Option<String> {
    let n = vertices.len();
    if n == 0 {
        return None;
    }
    let step = (n * n * n / budget.max(1)).max(1);
    let mut count = 0usize;
    for (ii, &x) in vertices.iter().enumerate() {
        for (jj, &y) in vertices.iter().enumerate() {
            if d.dist(x, y) != d.dist(y, x) {
                return Some(format!("asymmetry at ({x}, {y})"));
            }
            if (x == y) != (d.dist(x, y) == 0.0) {
                return Some(format!("identity failure at ({x}, {y})"));
            }
            for &z in vertices.iter() {
                count += 1;
                if count % step != 0 {
                    continue;
                }
                if d.dist(x, z) > d.dist(x, y) + d.dist(y, z) + 1e-9 {
                    return Some(format!("triangle failure at ({x}, {y}, {z})"));
                }
            }
            let _ = (ii, jj);
        }
    }
    None
}

/// g_d(w) = max over pairs in the cell of d, on every stored node.
pub fn weight_from_metric(tree: &PartitionTree, d: &dyn Metric) -> Result<WeightFunction> {
    let (h_min, h_max) = tree.heights();
    let mut values: BTreeMap<i32, Vec<f64>> = BTreeMap::new();
    for h in h_min..=h_max {
        let lv = match tree.level(h) {
            Some(l) => l,
            None => continue,
        };
        let mut row = Vec::with_capacity(lv.len());
        for i in 0..lv.len() as u32 {
            let cell = lv.cell(i);
            if cell.is_empty() {
                return Err(Error::EmptyCell {
                    level: h,
                    index: i as usize,
                });
            }
            let mut best = 0.0f64;
            for (ai, &a) in cell.iter().enumerate() {
                for &b in &cell[ai + 1..] {
                    best = best.max(d.dist(a, b));
                }
            }
            row.push(best);
        }
        values.insert(h, row);
    }
    Ok(WeightFunction::PerNode {
        values,
        label: "from-metric",
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct F1Report {
    /// Observed sup of d(x,y)/d(x,z) over x ~ y, z != x.
    pub constant: f64,
    pub witness: Option<(u64, u64, u64)>,
    pub samples: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct F2Entry {
    pub eps: f64,
    pub pass: bool,
    /// Witness (center id, radius, chain length, exhausted) fields.
    pub center: Option<u64>,
    pub radius: Option<f64>,
    pub chain_len: Option<usize>,
    pub exhausted: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct FittingReport {
    pub f1: F1Report,
    pub f2: Vec<F2Entry>,
    /// True when every F2 failure was established by exhausting all centers
    /// and candidate radii inside the window.
    pub window_exhausted: bool,
}

/// Check (F1) and (F2) on the window.
///
/// (F2) for a given eps succeeds if some center x0 and radius r admit an
/// edge chain inside B(x0, r) with steps <= eps r that exits the ball; a
/// failure is only reported after exhausting sampled centers and all
/// distance-derived candidate radii.
pub fn check_fitting(
    window: &Window,
    d: &dyn Metric,
    eps_grid: &[f64],
    center_budget: usize,
) -> FittingReport {
    let g = &window.graph;
    let n = g.len();
    // F1 over all edges x~y and sampled z.
    let mut f1 = F1Report {
        constant: 0.0,
        witness: None,
        samples: 0,
    };
    let z_stride = (n / 64).max(1);
    for (x, y) in g.edges() {
        for z in (0..n as VIdx).step_by(z_stride) {
            if z == x {
                continue;
            }
            for (a, b) in [(x, y), (y, x)] {
                if z == a {
                    continue;
                }
                let num = d.dist(a, b);
                let den = d.dist(a, z);
                if den > 0.0 && den.is_finite() {
                    let ratio = num / den;
                    f1.samples += 1;
                    if ratio > f1.constant {
                        f1.constant = ratio;
                        f1.witness = Some((g.id(a).0, g.id(b).0, g.id(z).0));
                    }
                }
            }
        }
    }

    // F2 per epsilon.
    let stride = (n / center_budget.max(1)).max(1);
    let centers: Vec<VIdx> = (0..n as VIdx).step_by(stride).collect();
    let mut f2 = Vec::new();
    let mut window_exhausted = true;
    for &eps in eps_grid {
        let mut entry = F2Entry {
            eps,
            pass: false,
            center: None,
            radius: None,
            chain_len: None,
            exhausted: false,
        };
        'center: for &x0 in &centers {
            // Candidate radii: just above each distinct distance from x0.
            let mut dists: Vec<f64> = (0..n as VIdx)
                .filter(|&v| v != x0)
                .map(|v| d.dist(x0, v))
                .filter(|v| v.is_finite())
                .collect();
            dists.sort_by(|a, b| a.partial_cmp(b).unwrap());
            dists.dedup();
            for &r in dists.iter() {
                // Strict ball membership keeps the r-sphere outside, and
                // within a fixed membership interval the step bound is most
                // generous at its top, so the distance values themselves are
                // the only radii worth testing.
                if let Some(len) = f2_chain_exists(window, d, x0, r, eps) {
                    entry.pass = true;
                    entry.center = Some(g.id(x0).0);
                    entry.radius = Some(r);
                    entry.chain_len = Some(len);
                    break 'center;
                }
            }
        }
        entry.exhausted = !entry.pass;
        if !entry.pass && centers.len() < n {
            window_exhausted = false;
        }
        f2.push(entry);
    }
    FittingReport {
        f1,
        f2,
        window_exhausted,
    }
}

/// BFS inside B(x0, r) over edges of length <= eps r; a chain exists iff
/// some reached vertex has an exit edge of length <= eps r.
fn f2_chain_exists(window: &Window, d: &dyn Metric, x0: VIdx, r: f64, eps: f64) -> Option<usize> {
    let g = &window.graph;
    let step = eps * r;
    let mut seen: HashSet<VIdx> = HashSet::new();
    let mut depth: HashMap<VIdx, usize> = HashMap::new();
    seen.insert(x0);
    depth.insert(x0, 0);
    let mut queue = VecDeque::new();
    queue.push_back(x0);
    while let Some(u) = queue.pop_front() {
        let du = depth[&u];
        for &v in g.neighbors(u) {
            if d.dist(u, v) > step {
                continue;
            }
            if d.dist(x0, v) >= r {
                return Some(du + 1);
            }
            if seen.insert(v) {
                depth.insert(v, du + 1);
                queue.push_back(v);
            }
        }
    }
    None
}

/// A symmetric positive kernel with its quasi-triangle constant estimated
/// over sampled triples.
pub struct QuasiMetric {
    pub phi: Vec<Vec<f64>>,
    pub quasi_constant: f64,
}

impl QuasiMetric {
    pub fn from_table(phi: Vec<Vec<f64>>) -> QuasiMetric {
        let n = phi.len();
        let mut c: f64 = 0.0;
        let stride = (n / 24).max(1);
        for x in (0..n).step_by(stride) {
            for y in (0..n).step_by(stride) {
                for z in (0..n).step_by(stride) {
                    if x != z && phi[x][y] + phi[y][z] > 0.0 {
                        c = c.max(phi[x][z] / (phi[x][y] + phi[y][z]));
                    }
                }
            }
        }
        QuasiMetric {
            phi,
            quasi_constant: c,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct PhiValue {
    pub value: f64,
    pub resistance: f64,
    pub vol_x: f64,
    pub vol_y: f64,
    pub truncated: bool,
}

/// phi(x, y) = R(x, y) (V(x, R(x,y)) + V(y, R(x,y))) with counting-measure
/// volumes of resistance balls. Truncated when the R-ball reaches the
/// window boundary.
pub fn phi_rv(
    net: &ResistanceNetwork,
    rm: &ResistanceMetric,
    x: VIdx,
    y: VIdx,
) -> Result<PhiValue> {
    if x == y {
        return Err(Error::InvalidParam("phi is defined off the diagonal".into()));
    }
    let r = rm.resistance(x, y)?;
    let window = net.window();
    let mut vol_x = 0.0;
    let mut vol_y = 0.0;
    let mut truncated = false;
    for v in 0..window.graph.len() as VIdx {
        let dx = rm.resistance(x, v)?;
        let dy = rm.resistance(y, v)?;
        if dx < r {
            vol_x += 1.0;
            if window.is_boundary(v) {
                truncated = true;
            }
        }
        if dy < r {
            vol_y += 1.0;
            if window.is_boundary(v) {
                truncated = true;
            }
        }
    }
    // The ball is only a window ball if no unseen vertex could be closer
    // than r; boundary vertices inside the ball already flag that.
    for b in window.boundary_indices() {
        if rm.resistance(x, b)? < r || rm.resistance(y, b)? < r {
            truncated = true;
        }
    }
    Ok(PhiValue {
        value: r * (vol_x + vol_y),
        resistance: r,
        vol_x,
        vol_y,
        truncated,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct ChainMetrizeReport {
    pub beta: f64,
    /// min and max of d_beta^beta / phi over off-diagonal sampled pairs.
    pub ratio_lo: f64,
    pub ratio_hi: f64,
    pub spread: f64,
}

/// d_beta(x,y): shortest path with edge costs phi^(1/beta) over the support
/// pairs. Returns the metric and the comparability band of d_beta^beta/phi.
pub fn metrize_chain(
    phi: &QuasiMetric,
    beta: f64,
    support: &[(VIdx, VIdx)],
) -> (ChainMetric, ChainMetrizeReport) {
    let n = phi.phi.len();
    let mut adj: Vec<Vec<(u32, f64)>> = vec![Vec::new(); n];
    for &(u, v) in support {
        let w = phi.phi[u as usize][v as usize].powf(1.0 / beta);
        adj[u as usize].push((v, w));
        adj[v as usize].push((u, w));
    }
    let mut dist = vec![vec![f64::INFINITY; n]; n];
    for s in 0..n {
        // Dijkstra
        let d = &mut dist[s];
        d[s] = 0.0;
        let mut heap: BinaryHeap<(OrdF64, u32)> = BinaryHeap::new();
        heap.push((ordered(0.0), s as u32));
        let mut done = vec![false; n];
        while let Some((du, u)) = heap.pop() {
            let du = -du.0;
            if done[u as usize] {
                continue;
            }
            done[u as usize] = true;
            for &(v, w) in &adj[u as usize] {
                let nd = du + w;
                if nd < d[v as usize] {
                    d[v as usize] = nd;
                    heap.push((ordered(nd), v));
                }
            }
        }
    }
    let mut lo = f64::INFINITY;
    let mut hi = 0.0f64;
    for x in 0..n {
        for y in 0..n {
            if x == y || phi.phi[x][y] <= 0.0 || !dist[x][y].is_finite() {
                continue;
            }
            let ratio = dist[x][y].powf(beta) / phi.phi[x][y];
            lo = lo.min(ratio);
            hi = hi.max(ratio);
        }
    }
    (
        ChainMetric { dist },
        ChainMetrizeReport {
            beta,
            ratio_lo: lo,
            ratio_hi: hi,
            spread: if lo > 0.0 { hi / lo } else { f64::INFINITY },
        },
    )
}

/// Grid search over beta in [1, 4] minimizing the log-spread of
/// d_beta^beta / phi.
pub fn best_beta(phi: &QuasiMetric, support: &[(VIdx, VIdx)], step: f64) -> (f64, ChainMetrizeReport) {
    let mut best: Option<(f64, ChainMetrizeReport)> = None;
    let mut beta = 1.0;
    while beta <= 4.0 + 1e-12 {
        let (_, rep) = metrize_chain(phi, beta, support);
        let better = match &best {
            None => true,
            Some((_, b)) => rep.spread < b.spread,
        };
        if better {
            best = Some((beta, rep));
        }
        beta += step;
    }
    best.expect("nonempty beta grid")
}

/// Max-heap helper: orders by negated value.
fn ordered(v: f64) -> OrdF64 {
    OrdF64(-v)
}

#[derive(PartialEq, PartialOrd)]
struct OrdF64(f64);

impl Eq for OrdF64 {}
#[allow(clippy::derive_ord_xor_partial_ord)]
impl Ord for OrdF64 {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.partial_cmp(other).unwrap_or(std::cmp::Ordering::Equal)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::families::dyadic::dyadic_halfline;

    #[test]
    fn graph_metric_axioms_on_path() {
        let (w, _t) = dyadic_halfline(4).unwrap();
        let d = GraphMetric::new(&w);
        let verts: Vec<VIdx> = (0..w.graph.len() as VIdx).collect();
        assert!(assert_metric_axioms(&d, &verts, 4000).is_none());
    }

    #[test]
    fn f1_constant_one_on_halfline_graph_metric() {
        let (w, _t) = dyadic_halfline(5).unwrap();
        let d = GraphMetric::new(&w);
        let rep = check_fitting(&w, &d, &[0.5, 0.25], 16);
        assert!((rep.f1.constant - 1.0).abs() < 1e-12);
        for e in &rep.f2 {
            assert!(e.pass, "eps = {}", e.eps);
        }
    }

    #[test]
    fn f2_fails_for_exponential_metric_at_half() {
        // d(n, m) = |2^n - 2^m| on the half-line path.
        let (w, _t) = dyadic_halfline(4).unwrap();
        struct ExpMetric<'a> {
            w: &'a Window,
        }
        impl Metric for ExpMetric<'_> {
            fn dist(&self, x: VIdx, y: VIdx) -> f64 {
                let a = self.w.graph.id(x).0 as f64;
                let b = self.w.graph.id(y).0 as f64;
                (a.exp2() - b.exp2()).abs()
            }
            fn kind(&self) -> &'static str {
                "custom"
            }
        }
        let d = ExpMetric { w: &w };
        // Failure for eps <= 1/2: every chain ends in a step of at least
        // half the covered distance. Above 1/2 a large-radius chain works.
        let rep = check_fitting(&w, &d, &[0.75, 0.5, 0.25], 1_000_000);
        assert!(rep.f2[0].pass, "eps = 0.75 admits a chain");
        for e in &rep.f2[1..] {
            assert!(!e.pass, "eps = {} should fail", e.eps);
            assert!(e.exhausted);
        }
        assert!(rep.f1.constant > 1.0);
    }

    #[test]
    fn chain_metrization_recovers_metric_power() {
        // phi = rho^2 for the path metric rho: d_2 must equal rho exactly.
        let (w, _t) = dyadic_halfline(3).unwrap();
        let n = w.graph.len();
        let gm = GraphMetric::new(&w);
        let mut phi = vec![vec![0.0; n]; n];
        for x in 0..n {
            for y in 0..n {
                let d = gm.dist(x as VIdx, y as VIdx);
                phi[x][y] = d * d;
            }
        }
        let q = QuasiMetric::from_table(phi);
        let support: Vec<(VIdx, VIdx)> = w.graph.edges();
        let (cm, rep) = metrize_chain(&q, 2.0, &support);
        for x in 0..n {
            for y in 0..n {
                let expect = gm.dist(x as VIdx, y as VIdx);
                assert!((cm.dist[x][y] - expect).abs() < 1e-9);
            }
        }
        assert!((rep.spread - 1.0).abs() < 1e-9);
    }

    #[test]
    fn chain_metric_triangle_and_single_hop_bound() {
        let (w, _t) = dyadic_halfline(3).unwrap();
        let n = w.graph.len();
        let gm = GraphMetric::new(&w);
        let mut phi = vec![vec![0.0; n]; n];
        for x in 0..n {
            for y in 0..n {
                let d = gm.dist(x as VIdx, y as VIdx);
                phi[x][y] = d.powf(1.7); // not a metric power of anything nice
            }
        }
        let q = QuasiMetric::from_table(phi);
        let support: Vec<(VIdx, VIdx)> = w.graph.edges();
        let beta = 1.3;
        let (cm, _) = metrize_chain(&q, beta, &support);
        for x in 0..n as VIdx {
            for y in 0..n as VIdx {
                for z in 0..n as VIdx {
                    assert!(
                        cm.dist(x, z) <= cm.dist(x, y) + cm.dist(y, z) + 1e-12,
                        "triangle violated"
                    );
                }
                if w.graph.has_edge(x, y) {
                    assert!(
                        cm.dist(x, y) <= q.phi[x as usize][y as usize].powf(1.0 / beta) + 1e-12
                    );
                }
            }
        }
    }
}

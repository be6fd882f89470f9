//! Weighted resistance networks: effective resistance via Laplacian solves,
//! delta-wye reduction, exact random-walk kernel iteration, exit times, and
//! the empirical heat-kernel / volume condition checkers.

use crate::error::{Error, Result};
use crate::graph::{Conductance, Graph, Provenance, VertexId, VIdx, Window};
use crate::metrics::Metric;
use crate::solve::DirichletProblem;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use std::collections::{HashMap, HashSet, VecDeque};

#[derive(Debug, Clone)]
pub struct ResistanceNetwork {
    window: Window,
    pub mu: Conductance,
    /// Weighted undirected edge list aligned with graph indices.
    edges: Vec<(u32, u32, f64)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TruncationPolicy {
    /// Treat the window as the entire network.
    Closed,
    /// Short boundary vertices into the sink: a certified lower bound on the
    /// infinite-graph resistance.
    ShortBoundaryToSink,
}

#[derive(Debug, Clone, Serialize)]
pub struct ResistanceValue {
    pub value: f64,
    /// Set when boundary vertices outside the terminal sets could carry
    /// current; under the shorting policy the value is a lower bound.
    pub truncated: bool,
    pub lower_bound: bool,
    pub iterations: usize,
}

impl ResistanceNetwork {
    pub fn new(window: Window, mu: Conductance) -> ResistanceNetwork {
        let edges = window
            .graph
            .edges()
            .into_iter()
            .enumerate()
            .map(|(k, (u, v))| (u, v, mu.edge_mu[k]))
            .collect();
        ResistanceNetwork { window, mu, edges }
    }

    pub fn unit(window: Window) -> ResistanceNetwork {
        let mu = Conductance::unit(&window.graph);
        ResistanceNetwork::new(window, mu)
    }

    pub fn window(&self) -> &Window {
        &self.window
    }

    pub fn graph(&self) -> &Graph {
        &self.window.graph
    }

    pub fn weighted_edges(&self) -> &[(u32, u32, f64)] {
        &self.edges
    }

    /// R(A, B) through the Dirichlet solve; infinite when disconnected.
    pub fn effective_resistance(
        &self,
        a: &[VIdx],
        b: &[VIdx],
        policy: TruncationPolicy,
        tol: f64,
    ) -> Result<ResistanceValue> {
        if a.is_empty() || b.is_empty() {
            return Err(Error::InvalidParam("terminal sets must be nonempty".into()));
        }
        let aset: HashSet<VIdx> = a.iter().copied().collect();
        let mut bset: HashSet<VIdx> = b.iter().copied().collect();
        if !aset.is_disjoint(&bset) {
            return Err(Error::InvalidParam("terminal sets must be disjoint".into()));
        }
        let mut truncated = false;
        for v in self.window.boundary_indices() {
            if !aset.contains(&v) && !bset.contains(&v) {
                truncated = true;
                if policy == TruncationPolicy::ShortBoundaryToSink {
                    bset.insert(v);
                }
            }
        }
        if aset.intersection(&bset).next().is_some() {
            return Err(Error::InvalidParam(
                "boundary shorting merged the terminal sets".into(),
            ));
        }
        let n = self.graph().len();
        let mut pinned: Vec<Option<f64>> = vec![None; n];
        for &x in &aset {
            pinned[x as usize] = Some(1.0);
        }
        for &x in &bset {
            pinned[x as usize] = Some(0.0);
        }
        let sol = DirichletProblem {
            n,
            edges: &self.edges,
            boundary: &pinned,
            rhs_extra: None,
        }
        .solve(tol, 40 * n + 1000, None)?;
        if !sol.converged {
            return Err(Error::NonConvergence {
                iterations: sol.iterations,
                residual: sol.residual,
            });
        }
        // Net current out of A.
        let mut current = 0.0;
        for &(u, v, w) in &self.edges {
            let ua = aset.contains(&u);
            let va = aset.contains(&v);
            if ua && !va {
                current += w * (1.0 - sol.values[v as usize]);
            } else if va && !ua {
                current += w * (1.0 - sol.values[u as usize]);
            }
        }
        let value = if current <= 0.0 {
            f64::INFINITY
        } else {
            1.0 / current
        };
        Ok(ResistanceValue {
            value,
            truncated,
            lower_bound: truncated && policy == TruncationPolicy::ShortBoundaryToSink,
            iterations: sol.iterations,
        })
    }

    pub fn resistance_ids(
        &self,
        a: &[VertexId],
        b: &[VertexId],
        policy: TruncationPolicy,
    ) -> Result<ResistanceValue> {
        let ai: Result<Vec<VIdx>> = a.iter().map(|&v| self.graph().idx(v)).collect();
        let bi: Result<Vec<VIdx>> = b.iter().map(|&v| self.graph().idx(v)).collect();
        self.effective_resistance(&ai?, &bi?, policy, 1e-14)
    }

    /// One column of the Laplacian pseudo-inverse (up to an additive
    /// constant), restricted to the component of x.
    pub fn pseudo_inverse_column(&self, x: VIdx) -> Result<Vec<f64>> {
        let n = self.graph().len();
        // Component mask.
        let dist = self.graph().bfs_distances(x);
        let comp: Vec<bool> = dist.iter().map(|&d| d != u32::MAX).collect();
        let m = comp.iter().filter(|&&c| c).count() as f64;
        // Solve L u = e_x - 1/m on the component by CG (unpinned, consistent).
        let mut u = vec![0.0; n];
        let mut b = vec![0.0; n];
        for i in 0..n {
            if comp[i] {
                b[i] = -1.0 / m;
            }
        }
        b[x as usize] += 1.0;
        // CG on the singular system.
        let mut deg = vec![0.0f64; n];
        let mut adj: Vec<Vec<(u32, f64)>> = vec![Vec::new(); n];
        for &(s, t, w) in &self.edges {
            adj[s as usize].push((t, w));
            adj[t as usize].push((s, w));
            deg[s as usize] += w;
            deg[t as usize] += w;
        }
        let apply = |v: &[f64], out: &mut [f64]| {
            for i in 0..n {
                if !comp[i] {
                    out[i] = 0.0;
                    continue;
                }
                let mut acc = deg[i] * v[i];
                for &(j, w) in &adj[i] {
                    acc -= w * v[j as usize];
                }
                out[i] = acc;
            }
        };
        let mut r = b.clone();
        let mut p = r.clone();
        let mut rr: f64 = r.iter().map(|v| v * v).sum();
        let bnorm = rr.sqrt().max(1e-300);
        let mut ap = vec![0.0; n];
        for _ in 0..(40 * n + 1000) {
            if rr.sqrt() / bnorm <= 1e-13 {
                break;
            }
            apply(&p, &mut ap);
            let pap: f64 = p.iter().zip(&ap).map(|(a, b)| a * b).sum();
            if pap <= 0.0 {
                break;
            }
            let alpha = rr / pap;
            for i in 0..n {
                u[i] += alpha * p[i];
                r[i] -= alpha * ap[i];
            }
            let rr_new: f64 = r.iter().map(|v| v * v).sum();
            let beta = rr_new / rr;
            rr = rr_new;
            for i in 0..n {
                p[i] = r[i] + beta * p[i];
            }
        }
        if rr.sqrt() / bnorm > 1e-10 {
            return Err(Error::NonConvergence {
                iterations: 40 * n + 1000,
                residual: rr.sqrt() / bnorm,
            });
        }
        for i in 0..n {
            if !comp[i] {
                u[i] = f64::INFINITY;
            }
        }
        Ok(u)
    }

    /// Delta-to-wye: replace the triangle on [a, b, c] by a star through a
    /// fresh vertex. All pairwise resistances between remaining vertices are
    /// preserved.
    pub fn delta_y_reduce(&self, tri: [VertexId; 3]) -> Result<ResistanceNetwork> {
        let g = self.graph();
        let idx = [g.idx(tri[0])?, g.idx(tri[1])?, g.idx(tri[2])?];
        let c_ab = self.mu.mu(idx[0], idx[1]);
        let c_bc = self.mu.mu(idx[1], idx[2]);
        let c_ca = self.mu.mu(idx[2], idx[0]);
        let (c_ab, c_bc, c_ca) = match (c_ab, c_bc, c_ca) {
            (Some(x), Some(y), Some(z)) if x > 0.0 && y > 0.0 && z > 0.0 => (x, y, z),
            _ => return Err(Error::NotATriangle([tri[0].0, tri[1].0, tri[2].0])),
        };
        let r_ab = 1.0 / c_ab;
        let r_bc = 1.0 / c_bc;
        let r_ca = 1.0 / c_ca;
        let total = r_ab + r_bc + r_ca;
        let r_a = r_ab * r_ca / total;
        let r_b = r_ab * r_bc / total;
        let r_c = r_bc * r_ca / total;

        let star = VertexId(g.ids().iter().map(|v| v.0).max().unwrap_or(0) + 1);
        let mut vertices: Vec<VertexId> = g.ids().to_vec();
        vertices.push(star);
        let mut edge_list: Vec<(VertexId, VertexId, f64)> = Vec::new();
        for (k, (u, v)) in g.edges().into_iter().enumerate() {
            let pair = [u, v];
            let is_tri_edge = (pair.contains(&idx[0]) && pair.contains(&idx[1]))
                || (pair.contains(&idx[1]) && pair.contains(&idx[2]))
                || (pair.contains(&idx[2]) && pair.contains(&idx[0]));
            if !is_tri_edge {
                edge_list.push((g.id(u), g.id(v), self.mu.edge_mu[k]));
            }
        }
        edge_list.push((tri[0], star, 1.0 / r_a));
        edge_list.push((tri[1], star, 1.0 / r_b));
        edge_list.push((tri[2], star, 1.0 / r_c));

        let pairs: Vec<(VertexId, VertexId)> = edge_list.iter().map(|&(u, v, _)| (u, v)).collect();
        let graph = Graph::build(vertices, &pairs, None)?;
        // Map conductances onto the canonical edge order.
        let mut by_pair: HashMap<(u64, u64), f64> = HashMap::new();
        for (u, v, w) in edge_list {
            let key = (u.0.min(v.0), u.0.max(v.0));
            *by_pair.entry(key).or_insert(0.0) += w;
        }
        let mu_vec: Vec<f64> = graph
            .edges()
            .into_iter()
            .map(|(u, v)| {
                let (a, b) = (graph.id(u).0, graph.id(v).0);
                by_pair[&(a.min(b), a.max(b))]
            })
            .collect();
        let boundary: Vec<VertexId> = self
            .window
            .boundary_indices()
            .into_iter()
            .map(|i| self.window.graph.id(i))
            .collect();
        let window = Window::new(
            graph,
            &boundary,
            Provenance {
                family: format!("{}+delta-y", self.window.provenance.family),
                depth: self.window.provenance.depth,
            },
        )?;
        let mu = Conductance::new(&window.graph, mu_vec)?;
        Ok(ResistanceNetwork::new(window, mu))
    }
}

/// Two-terminal reduction by prune / series / parallel / wye-delta /
/// delta-wye moves. Conductance-valued adjacency maps; parallel edges merge
/// by adding conductances.
pub fn reduce_two_terminal(net: &ResistanceNetwork, x: VertexId, y: VertexId) -> Result<f64> {
    let g = net.graph();
    let xi = g.idx(x)?;
    let yi = g.idx(y)?;
    let mut adj: HashMap<u32, HashMap<u32, f64>> = HashMap::new();
    for &(u, v, w) in net.weighted_edges() {
        *adj.entry(u).or_default().entry(v).or_insert(0.0) += w;
        *adj.entry(v).or_default().entry(u).or_insert(0.0) += w;
    }
    let mut next_id = g.len() as u32;
    let terminals = [xi, yi];
    let mut delta_budget = 60 * g.len() + 600;

    fn remove_vertex(adj: &mut HashMap<u32, HashMap<u32, f64>>, v: u32) -> Vec<(u32, f64)> {
        let nbrs = adj.remove(&v).unwrap_or_default();
        let list: Vec<(u32, f64)> = nbrs.into_iter().collect();
        for &(u, _) in &list {
            if let Some(m) = adj.get_mut(&u) {
                m.remove(&v);
            }
        }
        list
    }

    loop {
        // Degree-based simplifications to a fixed point.
        let mut changed = true;
        while changed {
            changed = false;
            let keys: Vec<u32> = adj.keys().copied().collect();
            for v in keys {
                if terminals.contains(&v) {
                    continue;
                }
                let deg = adj.get(&v).map_or(0, |m| m.len());
                match deg {
                    0 | 1 => {
                        remove_vertex(&mut adj, v);
                        changed = true;
                    }
                    2 => {
                        let list = remove_vertex(&mut adj, v);
                        let (a, ca) = list[0];
                        let (b, cb) = list[1];
                        let c = 1.0 / (1.0 / ca + 1.0 / cb);
                        *adj.entry(a).or_default().entry(b).or_insert(0.0) += c;
                        *adj.entry(b).or_default().entry(a).or_insert(0.0) += c;
                        changed = true;
                    }
                    3 => {
                        let list = remove_vertex(&mut adj, v);
                        let total: f64 = list.iter().map(|&(_, c)| c).sum();
                        for i in 0..3 {
                            for j in i + 1..3 {
                                let (a, ca) = list[i];
                                let (b, cb) = list[j];
                                let c = ca * cb / total;
                                *adj.entry(a).or_default().entry(b).or_insert(0.0) += c;
                                *adj.entry(b).or_default().entry(a).or_insert(0.0) += c;
                            }
                        }
                        changed = true;
                    }
                    _ => {}
                }
            }
        }

        if adj.len() <= 2 {
            break;
        }

        // No degree move available: delta-wye a triangle touching a
        // minimum-degree vertex to open up new series/star moves.
        if delta_budget == 0 {
            return Err(Error::ReductionStalled { vertices: adj.len() });
        }
        delta_budget -= 1;
        let mut tri: Option<(u32, u32, u32, f64)> = None;
        for (&u, nu) in &adj {
            for (&v, _) in nu {
                if v < u {
                    continue;
                }
                for (&w, _) in &adj[&v] {
                    if w <= v || w == u {
                        continue;
                    }
                    if adj[&w].contains_key(&u) {
                        let score = (adj[&u].len() + adj[&v].len() + adj[&w].len()) as f64;
                        if tri.map_or(true, |t| score < t.3) {
                            tri = Some((u, v, w, score));
                        }
                    }
                }
            }
        }
        let (u, v, w, _) = match tri {
            Some(t) => t,
            None => return Err(Error::ReductionStalled { vertices: adj.len() }),
        };
        let c_uv = adj[&u][&v];
        let c_vw = adj[&v][&w];
        let c_wu = adj[&w][&u];
        adj.get_mut(&u).unwrap().remove(&v);
        adj.get_mut(&v).unwrap().remove(&u);
        adj.get_mut(&v).unwrap().remove(&w);
        adj.get_mut(&w).unwrap().remove(&v);
        adj.get_mut(&w).unwrap().remove(&u);
        adj.get_mut(&u).unwrap().remove(&w);
        let (r_uv, r_vw, r_wu) = (1.0 / c_uv, 1.0 / c_vw, 1.0 / c_wu);
        let total = r_uv + r_vw + r_wu;
        let star = next_id;
        next_id += 1;
        let spokes = [
            (u, r_uv * r_wu / total),
            (v, r_uv * r_vw / total),
            (w, r_vw * r_wu / total),
        ];
        for (t, r) in spokes {
            let c = 1.0 / r;
            *adj.entry(t).or_default().entry(star).or_insert(0.0) += c;
            *adj.entry(star).or_default().entry(t).or_insert(0.0) += c;
        }
    }

    match adj.get(&xi).and_then(|m| m.get(&yi)) {
        Some(&c) if c > 0.0 => Ok(1.0 / c),
        _ => Ok(f64::INFINITY),
    }
}

/// Diagonal return-probability series p_{2n}(x, x) from exact transition
/// iteration, valid while no walk can feel the window boundary.
#[derive(Debug, Clone)]
pub struct HeatSeries {
    pub base: VertexId,
    /// p2n[n] = p_{2n}(x, x); index 0 holds p_0 = 1.
    pub p2n: Vec<f64>,
    pub mu_x: f64,
}

impl HeatSeries {
    /// Least-squares slope of -log p_{2n} against log n over [n_lo, n_hi].
    pub fn slope(&self, n_lo: usize, n_hi: usize) -> f64 {
        let pts: Vec<(f64, f64)> = (n_lo..=n_hi.min(self.p2n.len() - 1))
            .filter(|&n| n >= 1 && self.p2n[n] > 0.0)
            .map(|n| ((n as f64).ln(), -(self.p2n[n].ln())))
            .collect();
        let n = pts.len() as f64;
        let sx: f64 = pts.iter().map(|p| p.0).sum();
        let sy: f64 = pts.iter().map(|p| p.1).sum();
        let sxx: f64 = pts.iter().map(|p| p.0 * p.0).sum();
        let sxy: f64 = pts.iter().map(|p| p.0 * p.1).sum();
        (n * sxy - sx * sy) / (n * sxx - sx * sx)
    }
}

pub fn heat_kernel_diag(net: &ResistanceNetwork, x: VertexId, n_max: usize) -> Result<HeatSeries> {
    let g = net.graph();
    let xi = g.idx(x)?;
    // Exactness: a length-k loop at x stays within distance k/2, so p_k is
    // exact for k <= n_max iff every boundary vertex is farther than n_max/2.
    let dist = g.bfs_distances(xi);
    let mut radius = usize::MAX;
    for b in net.window().boundary_indices() {
        let d = dist[b as usize];
        if d != u32::MAX {
            radius = radius.min(d as usize);
        }
    }
    if radius != usize::MAX && n_max / 2 >= radius {
        return Err(Error::HorizonExceedsWindow {
            horizon: n_max,
            radius,
        });
    }

    let n = g.len();
    let mut prob = vec![0.0f64; n];
    prob[xi as usize] = 1.0;
    let mut nxt = vec![0.0f64; n];
    let mut p2n = Vec::with_capacity(n_max / 2 + 1);
    p2n.push(1.0);
    for step in 1..=n_max {
        nxt.iter_mut().for_each(|v| *v = 0.0);
        for &(u, v, w) in net.weighted_edges() {
            nxt[v as usize] += prob[u as usize] * w / net.mu.vertex_mu[u as usize];
            nxt[u as usize] += prob[v as usize] * w / net.mu.vertex_mu[v as usize];
        }
        std::mem::swap(&mut prob, &mut nxt);
        if step % 2 == 0 {
            p2n.push(prob[xi as usize]);
        }
    }
    Ok(HeatSeries {
        base: x,
        p2n,
        mu_x: net.mu.vertex_mu[xi as usize],
    })
}

/// Distribution after n steps from x (for h_n symmetry checks).
pub fn walk_distribution(net: &ResistanceNetwork, x: VertexId, steps: usize) -> Result<Vec<f64>> {
    let g = net.graph();
    let xi = g.idx(x)?;
    let n = g.len();
    let mut prob = vec![0.0f64; n];
    prob[xi as usize] = 1.0;
    let mut nxt = vec![0.0f64; n];
    for _ in 0..steps {
        nxt.iter_mut().for_each(|v| *v = 0.0);
        for &(u, v, w) in net.weighted_edges() {
            nxt[v as usize] += prob[u as usize] * w / net.mu.vertex_mu[u as usize];
            nxt[u as usize] += prob[v as usize] * w / net.mu.vertex_mu[v as usize];
        }
        std::mem::swap(&mut prob, &mut nxt);
    }
    Ok(prob)
}

#[derive(Debug, Clone, Serialize)]
pub struct ExitStats {
    pub mean: f64,
    pub stderr: Option<f64>,
    pub samples: usize,
    pub seed: Option<u64>,
    pub ball_size: usize,
}

/// Mean exit time from B_d(x, r): exact absorbing-chain solve.
pub fn exit_time_exact(net: &ResistanceNetwork, d: &dyn Metric, x: VertexId, r: f64) -> Result<ExitStats> {
    let g = net.graph();
    let xi = g.idx(x)?;
    let n = g.len();
    let ball: Vec<VIdx> = (0..n as VIdx).filter(|&v| d.dist(xi, v) < r).collect();
    for &v in &ball {
        if net.window().is_boundary(v) {
            return Err(Error::Truncated(format!(
                "exit ball around {} touches the window boundary",
                x.0
            )));
        }
    }
    let inball: HashSet<VIdx> = ball.iter().copied().collect();
    let mut pinned: Vec<Option<f64>> = (0..n)
        .map(|i| {
            if inball.contains(&(i as VIdx)) {
                None
            } else {
                Some(0.0)
            }
        })
        .collect();
    if pinned.iter().all(|p| p.is_some()) {
        // Empty ball: the walk exits immediately.
        return Ok(ExitStats {
            mean: 0.0,
            stderr: None,
            samples: 0,
            seed: None,
            ball_size: 0,
        });
    }
    // (D - A) t = mu on the ball.
    let rhs: Vec<f64> = (0..n)
        .map(|i| {
            if inball.contains(&(i as VIdx)) {
                net.mu.vertex_mu[i]
            } else {
                0.0
            }
        })
        .collect();
    // Boundary condition t = 0 outside the ball.
    for p in pinned.iter_mut() {
        if p.is_some() {
            *p = Some(0.0);
        }
    }
    let sol = DirichletProblem {
        n,
        edges: net.weighted_edges(),
        boundary: &pinned,
        rhs_extra: Some(&rhs),
    }
    .solve(1e-12, 40 * n + 1000, None)?;
    if !sol.converged {
        return Err(Error::NonConvergence {
            iterations: sol.iterations,
            residual: sol.residual,
        });
    }
    Ok(ExitStats {
        mean: sol.values[xi as usize],
        stderr: None,
        samples: 0,
        seed: None,
        ball_size: ball.len(),
    })
}

/// Monte Carlo exit time with an explicit seed and per-walk horizon.
pub fn exit_time_mc(
    net: &ResistanceNetwork,
    d: &dyn Metric,
    x: VertexId,
    r: f64,
    samples: usize,
    horizon: usize,
    seed: u64,
) -> Result<ExitStats> {
    let g = net.graph();
    let xi = g.idx(x)?;
    let ball: HashSet<VIdx> = (0..g.len() as VIdx).filter(|&v| d.dist(xi, v) < r).collect();
    for &v in &ball {
        if net.window().is_boundary(v) {
            return Err(Error::Truncated(format!(
                "exit ball around {} touches the window boundary",
                x.0
            )));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut times = Vec::with_capacity(samples);
    for _ in 0..samples {
        let mut pos = xi;
        let mut t = 0usize;
        while ball.contains(&pos) {
            if t >= horizon {
                return Err(Error::NonConvergence {
                    iterations: horizon,
                    residual: f64::NAN,
                });
            }
            // Weighted neighbor step.
            let mut u: f64 = rng.gen::<f64>() * net.mu.vertex_mu[pos as usize];
            let mut chosen = None;
            for &nb in g.neighbors(pos) {
                let w = net.mu.mu(pos, nb).unwrap();
                if u < w {
                    chosen = Some(nb);
                    break;
                }
                u -= w;
            }
            pos = chosen.unwrap_or_else(|| *g.neighbors(pos).last().unwrap());
            t += 1;
        }
        times.push(t as f64);
    }
    let mean = times.iter().sum::<f64>() / times.len() as f64;
    let var = times.iter().map(|t| (t - mean) * (t - mean)).sum::<f64>()
        / (times.len().max(2) - 1) as f64;
    Ok(ExitStats {
        mean,
        stderr: Some((var / times.len() as f64).sqrt()),
        samples,
        seed: Some(seed),
        ball_size: ball.len(),
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct Band {
    pub lo: f64,
    pub hi: f64,
    pub samples: usize,
}

impl Band {
    fn new() -> Band {
        Band {
            lo: f64::INFINITY,
            hi: f64::NEG_INFINITY,
            samples: 0,
        }
    }
    fn push(&mut self, v: f64) {
        if v.is_finite() {
            self.lo = self.lo.min(v);
            self.hi = self.hi.max(v);
            self.samples += 1;
        }
    }
    pub fn spread(&self) -> f64 {
        if self.samples == 0 || self.lo <= 0.0 {
            f64::INFINITY
        } else {
            self.hi / self.lo
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ConditionReport {
    pub p0: f64,
    pub volume_doubling: Band,
    pub uniformly_shrinking_alpha: Option<f64>,
    pub vg_alpha: f64,
    pub beta: f64,
    pub arl: Band,
    pub bru: Band,
    pub dhk: Band,
    pub exit_beta: Band,
    pub inconclusive: bool,
}

/// Empirical checks of the volume / resistance / heat-kernel conditions on
/// certified balls around the sampled centers.
pub fn check_conditions(
    net: &ResistanceNetwork,
    d: &dyn Metric,
    centers: &[VertexId],
    r_grid: &[f64],
    beta: f64,
    lambda: f64,
    heat_n_max: usize,
) -> Result<ConditionReport> {
    let g = net.graph();
    let p0 = net.mu.p0_estimate(g);
    let n = g.len();
    let mu_ball = |xi: VIdx, r: f64| -> (f64, bool) {
        let mut total = 0.0;
        let mut trunc = false;
        for v in 0..n as VIdx {
            if d.dist(xi, v) < r {
                total += net.mu.vertex_mu[v as usize];
                if net.window().is_boundary(v) {
                    trunc = true;
                }
            }
        }
        (total, trunc)
    };

    let mut vd = Band::new();
    let mut arl = Band::new();
    let mut bru = Band::new();
    let mut exit_beta = Band::new();
    let mut vg_alpha: f64 = 0.0;
    let mut shrink_alpha: Option<f64> = Some(1.0);
    let mut inconclusive = true;

    for &c in centers {
        let xi = g.idx(c)?;
        let mut vols: Vec<(f64, f64)> = Vec::new();
        for &r in r_grid {
            let (v_r, t_r) = mu_ball(xi, r);
            let (v_2r, t_2r) = mu_ball(xi, 2.0 * r);
            if t_2r || v_r <= 0.0 {
                continue;
            }
            inconclusive = false;
            vd.push(v_2r / v_r);
            vols.push((r, v_r));
            let _ = t_r;

            // uniformly shrinking: largest alpha on a halving grid with
            // B(x, r) \ B(x, alpha r) nonempty.
            let ball: Vec<VIdx> = (0..n as VIdx).filter(|&v| d.dist(xi, v) < r).collect();
            if ball.len() > 1 {
                let mut alpha = 0.5f64;
                let mut ok = None;
                for _ in 0..8 {
                    let has_annulus = ball.iter().any(|&v| d.dist(xi, v) >= alpha * r);
                    if has_annulus {
                        ok = Some(alpha);
                        break;
                    }
                    alpha *= 0.5;
                }
                shrink_alpha = match (shrink_alpha, ok) {
                    (Some(a), Some(b)) => Some(a.min(b)),
                    _ => None,
                };
            }

            // Resistance conditions on this ball.
            let inner: Vec<VIdx> = ball
                .iter()
                .copied()
                .filter(|&v| d.dist(xi, v) < lambda * r)
                .collect();
            let outer: Vec<VIdx> = (0..n as VIdx).filter(|&v| d.dist(xi, v) >= r).collect();
            if !outer.is_empty() {
                if !inner.is_empty() && inner.len() + outer.len() < n + 1 {
                    if let Ok(rv) =
                        net.effective_resistance(&inner, &outer, TruncationPolicy::Closed, 1e-12)
                    {
                        if rv.value.is_finite() {
                            arl.push(rv.value * v_r / r.powf(beta));
                        }
                    }
                }
                if let Ok(rv) =
                    net.effective_resistance(&[xi], &outer, TruncationPolicy::Closed, 1e-12)
                {
                    if rv.value.is_finite() {
                        bru.push(rv.value * v_r / r.powf(beta));
                    }
                }
            }

            if let Ok(stats) = exit_time_exact(net, d, c, r) {
                exit_beta.push(stats.mean / r.powf(beta));
            }
        }
        // VG(alpha): max log-slope of V across the certified grid.
        for i in 0..vols.len() {
            for j in i + 1..vols.len() {
                let (r1, v1) = vols[i];
                let (r2, v2) = vols[j];
                if r2 > r1 && v1 > 0.0 {
                    vg_alpha = vg_alpha.max((v2 / v1).ln() / (r2 / r1).ln());
                }
            }
        }
    }

    // DHK(beta): h_{2n}(x,x) * V(x, n^{1/beta}) along a dyadic n-grid.
    let mut dhk = Band::new();
    if let Some(&c) = centers.first() {
        if let Ok(series) = heat_kernel_diag(net, c, heat_n_max) {
            let xi = g.idx(c)?;
            let mut n_step = 2usize;
            while n_step <= series.p2n.len() - 1 {
                let h = series.p2n[n_step] / series.mu_x;
                let (v, trunc) = mu_ball(xi, (2.0 * n_step as f64).powf(1.0 / beta));
                if !trunc {
                    dhk.push(h * v);
                }
                n_step *= 2;
            }
        }
    }

    Ok(ConditionReport {
        p0,
        volume_doubling: vd,
        uniformly_shrinking_alpha: shrink_alpha,
        vg_alpha,
        beta,
        arl,
        bru,
        dhk,
        exit_beta,
        inconclusive,
    })
}

/// Convenience: sweep beta over hint +- 0.5 and keep the value minimizing
/// the combined ARL/BRU band spread.
pub fn check_conditions_sweep(
    net: &ResistanceNetwork,
    d: &dyn Metric,
    centers: &[VertexId],
    r_grid: &[f64],
    beta_hint: f64,
    lambda: f64,
    heat_n_max: usize,
) -> Result<(ConditionReport, Vec<(f64, f64)>)> {
    let mut best: Option<ConditionReport> = None;
    let mut sweep = Vec::new();
    let mut beta = (beta_hint - 0.5).max(1.0);
    while beta <= beta_hint + 0.5 + 1e-9 {
        let rep = check_conditions(net, d, centers, r_grid, beta, lambda, heat_n_max)?;
        let score = rep.bru.spread() * rep.arl.spread();
        sweep.push((beta, score));
        let better = match &best {
            None => true,
            Some(b) => score < b.bru.spread() * b.arl.spread(),
        };
        if better {
            best = Some(rep);
        }
        beta += 0.125;
    }
    Ok((best.expect("nonempty beta sweep"), sweep))
}

/// BFS ball in the graph metric, used by walkers that do not need a full
/// metric oracle.
pub fn graph_ball_vertices(g: &Graph, x: VIdx, radius: u32) -> Vec<VIdx> {
    let mut dist = HashMap::new();
    dist.insert(x, 0u32);
    let mut queue = VecDeque::new();
    queue.push_back(x);
    let mut out = vec![x];
    while let Some(u) = queue.pop_front() {
        let du = dist[&u];
        if du >= radius {
            continue;
        }
        for &v in g.neighbors(u) {
            if let std::collections::hash_map::Entry::Vacant(e) = dist.entry(v) {
                e.insert(du + 1);
                out.push(v);
                queue.push_back(v);
            }
        }
    }
    out
}

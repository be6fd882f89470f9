//! Bounded-degree graph windows: finite truncations of infinite graphs with
//! explicit boundary marking, metric balls, and conductances.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::collections::VecDeque;
use std::fmt::Write as _;

/// Opaque vertex handle assigned by a family generator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct VertexId(pub u64);

/// Internal dense index into a window's vertex arrays.
pub type VIdx = u32;

/// Simple bounded-degree graph. Adjacency is symmetric, self-loop free and
/// stored sorted per vertex.
#[derive(Debug, Clone)]
pub struct Graph {
    ids: Vec<VertexId>,
    index: HashMap<VertexId, VIdx>,
    adj: Vec<Vec<VIdx>>,
    /// Geometric coordinates, stored apart from the combinatorics. Exact
    /// integer pairs; interpretation is family specific.
    coords: Option<Vec<(i64, i64)>>,
}

impl Graph {
    pub fn build(
        vertices: Vec<VertexId>,
        edges: &[(VertexId, VertexId)],
        coords: Option<Vec<(i64, i64)>>,
    ) -> Result<Graph> {
        let mut index = HashMap::with_capacity(vertices.len());
        for (i, &v) in vertices.iter().enumerate() {
            if index.insert(v, i as VIdx).is_some() {
                return Err(Error::InvalidParam(format!("duplicate vertex id {}", v.0)));
            }
        }
        if let Some(c) = &coords {
            if c.len() != vertices.len() {
                return Err(Error::InvalidParam(
                    "coordinate list length differs from vertex list".into(),
                ));
            }
        }
        let mut adj = vec![Vec::new(); vertices.len()];
        for &(u, v) in edges {
            if u == v {
                return Err(Error::InvalidParam(format!("self-loop at vertex {}", u.0)));
            }
            let ui = *index
                .get(&u)
                .ok_or(Error::UnknownVertex(u.0))?;
            let vi = *index
                .get(&v)
                .ok_or(Error::UnknownVertex(v.0))?;
            adj[ui as usize].push(vi);
            adj[vi as usize].push(ui);
        }
        for list in &mut adj {
            list.sort_unstable();
            list.dedup();
        }
        Ok(Graph {
            ids: vertices,
            index,
            adj,
            coords,
        })
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn edge_count(&self) -> usize {
        self.adj.iter().map(|a| a.len()).sum::<usize>() / 2
    }

    pub fn contains(&self, v: VertexId) -> bool {
        self.index.contains_key(&v)
    }

    pub fn idx(&self, v: VertexId) -> Result<VIdx> {
        self.index.get(&v).copied().ok_or(Error::UnknownVertex(v.0))
    }

    pub fn id(&self, i: VIdx) -> VertexId {
        self.ids[i as usize]
    }

    pub fn ids(&self) -> &[VertexId] {
        &self.ids
    }

    pub fn neighbors(&self, i: VIdx) -> &[VIdx] {
        &self.adj[i as usize]
    }

    pub fn degree(&self, i: VIdx) -> usize {
        self.adj[i as usize].len()
    }

    pub fn coord(&self, i: VIdx) -> Option<(i64, i64)> {
        self.coords.as_ref().map(|c| c[i as usize])
    }

    pub fn has_edge(&self, u: VIdx, v: VIdx) -> bool {
        self.adj[u as usize].binary_search(&v).is_ok()
    }

    /// Canonical undirected edge list, each edge once with u < v by index.
    pub fn edges(&self) -> Vec<(VIdx, VIdx)> {
        let mut out = Vec::with_capacity(self.edge_count());
        for u in 0..self.adj.len() as VIdx {
            for &v in &self.adj[u as usize] {
                if u < v {
                    out.push((u, v));
                }
            }
        }
        out
    }

    /// Breadth-first distances from `src`, `u32::MAX` marking unreachable.
    pub fn bfs_distances(&self, src: VIdx) -> Vec<u32> {
        let mut dist = vec![u32::MAX; self.len()];
        dist[src as usize] = 0;
        let mut queue = VecDeque::new();
        queue.push_back(src);
        while let Some(u) = queue.pop_front() {
            let du = dist[u as usize];
            for &v in self.neighbors(u) {
                if dist[v as usize] == u32::MAX {
                    dist[v as usize] = du + 1;
                    queue.push_back(v);
                }
            }
        }
        dist
    }

    /// Shortest-path length in the graph metric.
    pub fn graph_metric(&self, x: VertexId, y: VertexId) -> Result<u32> {
        let xi = self.idx(x)?;
        let yi = self.idx(y)?;
        if xi == yi {
            return Ok(0);
        }
        // Early-exit BFS.
        let mut dist = HashMap::new();
        dist.insert(xi, 0u32);
        let mut queue = VecDeque::new();
        queue.push_back(xi);
        while let Some(u) = queue.pop_front() {
            let du = dist[&u];
            for &v in self.neighbors(u) {
                if !dist.contains_key(&v) {
                    if v == yi {
                        return Ok(du + 1);
                    }
                    dist.insert(v, du + 1);
                    queue.push_back(v);
                }
            }
        }
        Err(Error::Unreachable { from: x.0, to: y.0 })
    }
}

/// Window provenance: which family generated it and at what depth.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Provenance {
    pub family: String,
    pub depth: u32,
}

/// Finite truncation of an infinite graph. Vertices whose neighbor list may
/// be incomplete are in `boundary`; everything derived from the window flags
/// itself as truncated the moment its dependency cone reaches them.
#[derive(Debug, Clone)]
pub struct Window {
    pub graph: Graph,
    boundary: Vec<bool>,
    pub provenance: Provenance,
}

/// Result of a ball computation. `truncated` means the ball touches the
/// window boundary and the vertex set is only a lower approximation.
#[derive(Debug, Clone)]
pub struct BallResult {
    pub vertices: Vec<VIdx>,
    pub truncated: bool,
}

impl Window {
    pub fn new(graph: Graph, boundary_ids: &[VertexId], provenance: Provenance) -> Result<Window> {
        let mut boundary = vec![false; graph.len()];
        for &b in boundary_ids {
            boundary[graph.idx(b)? as usize] = true;
        }
        let w = Window {
            graph,
            boundary,
            provenance,
        };
        w.assert_well_formed()?;
        Ok(w)
    }

    /// Symmetry and absence of self-loops are enforced structurally by
    /// `Graph::build`; this re-checks them on every construction.
    fn assert_well_formed(&self) -> Result<()> {
        for u in 0..self.graph.len() as VIdx {
            for &v in self.graph.neighbors(u) {
                if v == u {
                    return Err(Error::InvalidParam(format!(
                        "self-loop at {}",
                        self.graph.id(u).0
                    )));
                }
                if !self.graph.has_edge(v, u) {
                    return Err(Error::InvalidParam(format!(
                        "asymmetric adjacency between {} and {}",
                        self.graph.id(u).0,
                        self.graph.id(v).0
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn is_boundary(&self, i: VIdx) -> bool {
        self.boundary[i as usize]
    }

    pub fn boundary_indices(&self) -> Vec<VIdx> {
        (0..self.graph.len() as VIdx)
            .filter(|&i| self.boundary[i as usize])
            .collect()
    }

    pub fn interior_indices(&self) -> Vec<VIdx> {
        (0..self.graph.len() as VIdx)
            .filter(|&i| !self.boundary[i as usize])
            .collect()
    }

    /// `B_d(x, r) = {y | d(x, y) < r}` for the graph metric, by BFS.
    pub fn graph_ball(&self, x: VertexId, r: f64) -> Result<BallResult> {
        let xi = self.graph.idx(x)?;
        if r <= 0.0 {
            return Ok(BallResult {
                vertices: Vec::new(),
                truncated: false,
            });
        }
        let mut dist: HashMap<VIdx, u32> = HashMap::new();
        dist.insert(xi, 0);
        let mut queue = VecDeque::new();
        queue.push_back(xi);
        let mut out = vec![xi];
        let mut truncated = self.is_boundary(xi);
        while let Some(u) = queue.pop_front() {
            let du = dist[&u];
            if du as f64 + 1.0 >= r {
                continue;
            }
            for &v in self.graph.neighbors(u) {
                if let std::collections::hash_map::Entry::Vacant(e) = dist.entry(v) {
                    e.insert(du + 1);
                    if self.is_boundary(v) {
                        truncated = true;
                    }
                    out.push(v);
                    queue.push_back(v);
                }
            }
        }
        Ok(BallResult {
            vertices: out,
            truncated,
        })
    }

    /// Ball under an arbitrary distance function over the window.
    pub fn metric_ball<F: Fn(VIdx) -> f64>(&self, dist_to: F, r: f64) -> BallResult {
        let mut vertices = Vec::new();
        let mut truncated = false;
        for i in 0..self.graph.len() as VIdx {
            if dist_to(i) < r {
                vertices.push(i);
                if self.is_boundary(i) {
                    truncated = true;
                }
            }
        }
        BallResult {
            vertices,
            truncated,
        }
    }

    /// (max degree, min degree) over interior vertices.
    pub fn degree_stats(&self) -> Result<(usize, usize)> {
        let interior = self.interior_indices();
        if interior.is_empty() {
            return Err(Error::InvalidParam("window has no interior vertices".into()));
        }
        let mut max = 0usize;
        let mut min = usize::MAX;
        for i in interior {
            let d = self.graph.degree(i);
            max = max.max(d);
            min = min.min(d);
        }
        Ok((max, min))
    }

    pub fn to_json(&self) -> serde_json::Value {
        let mut vertices: Vec<u64> = self.graph.ids().iter().map(|v| v.0).collect();
        vertices.sort_unstable();
        let mut edges: Vec<[u64; 2]> = self
            .graph
            .edges()
            .into_iter()
            .map(|(u, v)| {
                let (a, b) = (self.graph.id(u).0, self.graph.id(v).0);
                if a < b {
                    [a, b]
                } else {
                    [b, a]
                }
            })
            .collect();
        edges.sort_unstable();
        let mut boundary: Vec<u64> = self
            .boundary_indices()
            .into_iter()
            .map(|i| self.graph.id(i).0)
            .collect();
        boundary.sort_unstable();
        serde_json::json!({
            "vertices": vertices,
            "edges": edges,
            "boundary": boundary,
            "provenance": self.provenance,
        })
    }

    pub fn to_dot(&self) -> String {
        let mut s = String::from("graph window {\n");
        for i in 0..self.graph.len() as VIdx {
            let id = self.graph.id(i).0;
            if self.is_boundary(i) {
                let _ = writeln!(s, "  v{id} [shape=box];");
            }
        }
        let mut edges = self.graph.edges();
        edges.sort_unstable();
        for (u, v) in edges {
            let _ = writeln!(s, "  v{} -- v{};", self.graph.id(u).0, self.graph.id(v).0);
        }
        s.push_str("}\n");
        s
    }

    pub fn from_json(value: &serde_json::Value) -> Result<Window> {
        #[derive(Deserialize)]
        struct Repr {
            vertices: Vec<u64>,
            edges: Vec<[u64; 2]>,
            #[serde(default)]
            boundary: Vec<u64>,
            #[serde(default)]
            provenance: Option<Provenance>,
        }
        let repr: Repr = serde_json::from_value(value.clone())?;
        let vertices: Vec<VertexId> = repr.vertices.into_iter().map(VertexId).collect();
        let edges: Vec<(VertexId, VertexId)> = repr
            .edges
            .into_iter()
            .map(|[u, v]| (VertexId(u), VertexId(v)))
            .collect();
        let graph = Graph::build(vertices, &edges, None)?;
        let boundary: Vec<VertexId> = repr.boundary.into_iter().map(VertexId).collect();
        Window::new(
            graph,
            &boundary,
            repr.provenance.unwrap_or(Provenance {
                family: "imported".into(),
                depth: 0,
            }),
        )
    }
}

/// Edge conductances mu_xy > 0 with the vertex sums mu_x cached.
#[derive(Debug, Clone)]
pub struct Conductance {
    /// Aligned with `Graph::edges()` canonical order.
    pub edge_mu: Vec<f64>,
    pub vertex_mu: Vec<f64>,
    edge_index: HashMap<(VIdx, VIdx), usize>,
}

impl Conductance {
    pub fn new(graph: &Graph, edge_mu: Vec<f64>) -> Result<Conductance> {
        let edges = graph.edges();
        if edges.len() != edge_mu.len() {
            return Err(Error::InvalidParam(format!(
                "conductance list has {} entries for {} edges",
                edge_mu.len(),
                edges.len()
            )));
        }
        if let Some(m) = edge_mu.iter().find(|&&m| !(m > 0.0)) {
            return Err(Error::InvalidParam(format!("non-positive conductance {m}")));
        }
        let mut vertex_mu = vec![0.0; graph.len()];
        let mut edge_index = HashMap::with_capacity(edges.len());
        for (k, &(u, v)) in edges.iter().enumerate() {
            vertex_mu[u as usize] += edge_mu[k];
            vertex_mu[v as usize] += edge_mu[k];
            edge_index.insert((u, v), k);
        }
        Ok(Conductance {
            edge_mu,
            vertex_mu,
            edge_index,
        })
    }

    pub fn unit(graph: &Graph) -> Conductance {
        Conductance::new(graph, vec![1.0; graph.edge_count()]).expect("unit weights are positive")
    }

    pub fn mu(&self, u: VIdx, v: VIdx) -> Option<f64> {
        let key = if u < v { (u, v) } else { (v, u) };
        self.edge_index.get(&key).map(|&k| self.edge_mu[k])
    }

    pub fn edge_of(&self, u: VIdx, v: VIdx) -> Option<usize> {
        let key = if u < v { (u, v) } else { (v, u) };
        self.edge_index.get(&key).copied()
    }

    /// min over edges of mu_xy / mu_x: the controlled-weight constant.
    pub fn p0_estimate(&self, graph: &Graph) -> f64 {
        let mut p0 = f64::INFINITY;
        for (k, &(u, v)) in graph.edges().iter().enumerate() {
            p0 = p0.min(self.edge_mu[k] / self.vertex_mu[u as usize]);
            p0 = p0.min(self.edge_mu[k] / self.vertex_mu[v as usize]);
        }
        p0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn path(n: u64) -> Window {
        let vertices: Vec<VertexId> = (0..=n).map(VertexId).collect();
        let edges: Vec<(VertexId, VertexId)> =
            (0..n).map(|i| (VertexId(i), VertexId(i + 1))).collect();
        let graph = Graph::build(vertices, &edges, None).unwrap();
        Window::new(
            graph,
            &[VertexId(n)],
            Provenance {
                family: "path".into(),
                depth: 0,
            },
        )
        .unwrap()
    }

    #[test]
    fn ball_on_path() {
        let w = path(2);
        let ball = w.graph_ball(VertexId(0), 1.5).unwrap();
        let mut ids: Vec<u64> = ball.vertices.iter().map(|&i| w.graph.id(i).0).collect();
        ids.sort_unstable();
        assert_eq!(ids, vec![0, 1]);
        assert!(!ball.truncated);
    }

    #[test]
    fn zero_radius_ball_is_empty() {
        let w = path(4);
        let ball = w.graph_ball(VertexId(2), 0.0).unwrap();
        assert!(ball.vertices.is_empty());
    }

    #[test]
    fn ball_touching_boundary_flags_truncation() {
        let w = path(3);
        let ball = w.graph_ball(VertexId(2), 1.5).unwrap();
        assert!(ball.truncated);
    }

    #[test]
    fn metric_identity_adjacent_and_distance() {
        let w = path(5);
        assert_eq!(w.graph.graph_metric(VertexId(3), VertexId(3)).unwrap(), 0);
        assert_eq!(w.graph.graph_metric(VertexId(3), VertexId(4)).unwrap(), 1);
        assert_eq!(w.graph.graph_metric(VertexId(0), VertexId(5)).unwrap(), 5);
    }

    #[test]
    fn disconnected_reports_unreachable() {
        let graph = Graph::build(
            vec![VertexId(0), VertexId(1), VertexId(2), VertexId(3)],
            &[(VertexId(0), VertexId(1)), (VertexId(2), VertexId(3))],
            None,
        )
        .unwrap();
        let w = Window::new(
            graph,
            &[],
            Provenance {
                family: "pair".into(),
                depth: 0,
            },
        )
        .unwrap();
        assert!(matches!(
            w.graph.graph_metric(VertexId(0), VertexId(3)),
            Err(Error::Unreachable { .. })
        ));
    }

    #[test]
    fn degree_stats_on_halfline() {
        let w = path(8);
        // Interior excludes the truncated right end; 0 is a true endpoint.
        let (max, min) = w.degree_stats().unwrap();
        assert_eq!((max, min), (2, 1));
    }

    #[test]
    fn json_roundtrip_and_determinism() {
        let w = path(4);
        let a = w.to_json().to_string();
        let w2 = Window::from_json(&w.to_json()).unwrap();
        let b = w2.to_json().to_string();
        assert_eq!(a, b);
    }

    #[test]
    fn conductance_p0_on_unit_weights() {
        let w = path(4);
        let c = Conductance::unit(&w.graph);
        // max degree 2 => p0 = 1/2
        assert!((c.p0_estimate(&w.graph) - 0.5).abs() < 1e-15);
        assert_eq!(c.mu(0, 1), Some(1.0));
    }
}

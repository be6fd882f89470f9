//! Partition trees over graph windows: parent maps, cells, the edge-cell set
//! Lambda_e, dyadic chain subdivision T_r, horizontal networks J^h_m, scale
//! sets Lambda^g_s and U^g_M neighborhoods.

use crate::error::{Error, Result};
use crate::graph::{VIdx, Window};
use serde::Serialize;
use std::collections::{BTreeMap, HashMap, HashSet, VecDeque};
use std::fmt::Write as _;
use std::sync::OnceLock;

/// Address of a stored tree node: height plus index within its level.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct NodeId {
    pub height: i32,
    pub idx: u32,
}

/// A node of the subdivided tree T_r. Stored nodes cover T_e; everything
/// below an edge cell is a dyadic chain cell addressed arithmetically.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum NodeRef {
    Te(NodeId),
    Chain { edge: NodeId, depth: u32, pos: u64 },
}

impl NodeRef {
    pub fn height(&self) -> i32 {
        match *self {
            NodeRef::Te(n) => n.height,
            NodeRef::Chain { edge, depth, .. } => edge.height + depth as i32,
        }
    }
}

pub const NO_PARENT: u32 = u32::MAX;

#[derive(Debug, Clone, Default)]
pub struct Level {
    pub parent: Vec<u32>,
    cell_off: Vec<u32>,
    cell_vtx: Vec<VIdx>,
    pub lambda_e: Vec<bool>,
    pub complete: Vec<bool>,
    children: OnceLock<Vec<Vec<u32>>>,
    vtx_index: OnceLock<HashMap<VIdx, Vec<u32>>>,
}

impl Level {
    pub fn len(&self) -> usize {
        self.parent.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parent.is_empty()
    }

    pub fn cell(&self, idx: u32) -> &[VIdx] {
        let a = self.cell_off[idx as usize] as usize;
        let b = self.cell_off[idx as usize + 1] as usize;
        &self.cell_vtx[a..b]
    }

    fn vtx_index(&self) -> &HashMap<VIdx, Vec<u32>> {
        self.vtx_index.get_or_init(|| {
            let mut map: HashMap<VIdx, Vec<u32>> = HashMap::new();
            for i in 0..self.len() as u32 {
                for &x in self.cell(i) {
                    map.entry(x).or_default().push(i);
                }
            }
            map
        })
    }
}

/// Chain subdivision parameters: ratio r in (0,1) fixing the chain widths
/// 2^{n(m)} via 2^{-n(m)} <= r^m < 2^{1-n(m)}.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct Subdivision {
    pub r: f64,
}

impl Subdivision {
    /// Width exponent n(m) for depth m >= 1 below an edge cell; n(0) = 0.
    pub fn n_of(&self, m: u32) -> u32 {
        if m == 0 {
            return 0;
        }
        let target = (m as f64) * (-self.r.log2());
        let mut n = target.ceil() as i64;
        if n < 1 {
            n = 1;
        }
        // Fix up floating point at the bracket edges.
        let rm = self.r.powi(m as i32);
        while (-(n as f64)).exp2() > rm {
            n += 1;
        }
        while n > 1 && (-((n - 1) as f64)).exp2() <= rm {
            n -= 1;
        }
        n as u32
    }
}

#[derive(Debug, Clone)]
pub struct PartitionTree {
    levels: BTreeMap<i32, Level>,
    pub subdivision: Option<Subdivision>,
    lambda_by_vertex: OnceLock<HashMap<VIdx, Vec<NodeId>>>,
}

/// A horizontal network: the nodes of one level with the J^h adjacency.
#[derive(Debug, Clone)]
pub struct HorizontalNet {
    pub level: i32,
    pub nodes: Vec<NodeRef>,
    pub index: HashMap<NodeRef, u32>,
    /// J^h adjacency (N = 1), sorted neighbor lists.
    pub pairs: Vec<Vec<u32>>,
    pub complete: Vec<bool>,
    pub truncated: bool,
}

/// Set returned by certified searches: partial result plus a flag when the
/// frontier touched an incomplete node.
#[derive(Debug, Clone)]
pub struct CertifiedNodes {
    pub nodes: Vec<NodeRef>,
    pub truncated: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct AxiomCheck {
    pub pass: bool,
    pub checked: usize,
    pub witness: Option<String>,
}

impl AxiomCheck {
    fn pass(checked: usize) -> Self {
        AxiomCheck {
            pass: true,
            checked,
            witness: None,
        }
    }
    fn fail(checked: usize, witness: String) -> Self {
        AxiomCheck {
            pass: false,
            checked,
            witness: Some(witness),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct PartitionReport {
    pub pg1: AxiomCheck,
    pub pg2: AxiomCheck,
    pub pg3: AxiomCheck,
    pub minimal: AxiomCheck,
    pub connected: AxiomCheck,
    pub lambda_unique: AxiomCheck,
}

impl PartitionReport {
    pub fn all_pass(&self) -> bool {
        self.pg1.pass
            && self.pg2.pass
            && self.pg3.pass
            && self.minimal.pass
            && self.connected.pass
            && self.lambda_unique.pass
    }
}

pub struct LevelBuilder {
    pub parent: Vec<u32>,
    pub cells: Vec<Vec<VIdx>>,
    pub lambda_e: Vec<bool>,
}

impl PartitionTree {
    /// Assemble a tree from per-height builders (coarse to fine). Cell lists
    /// are sorted and completeness is derived from the window boundary.
    pub fn assemble(mut builders: BTreeMap<i32, LevelBuilder>, window: &Window) -> Result<PartitionTree> {
        let mut levels: BTreeMap<i32, Level> = BTreeMap::new();
        let heights: Vec<i32> = builders.keys().copied().collect();
        for &h in &heights {
            let b = builders.remove(&h).unwrap();
            if b.parent.len() != b.cells.len() || b.parent.len() != b.lambda_e.len() {
                return Err(Error::InvalidParam(format!(
                    "level {h}: mismatched builder array lengths"
                )));
            }
            let mut cell_off = Vec::with_capacity(b.cells.len() + 1);
            let mut cell_vtx = Vec::new();
            cell_off.push(0u32);
            for mut c in b.cells {
                c.sort_unstable();
                c.dedup();
                if c.is_empty() {
                    return Err(Error::EmptyCell {
                        level: h,
                        index: cell_off.len() - 1,
                    });
                }
                cell_vtx.extend_from_slice(&c);
                cell_off.push(cell_vtx.len() as u32);
            }
            let n = b.parent.len();
            levels.insert(
                h,
                Level {
                    parent: b.parent,
                    cell_off,
                    cell_vtx,
                    lambda_e: b.lambda_e,
                    complete: vec![false; n],
                    children: OnceLock::new(),
                    vtx_index: OnceLock::new(),
                },
            );
        }
        let mut tree = PartitionTree {
            levels,
            subdivision: None,
            lambda_by_vertex: OnceLock::new(),
        };
        tree.compute_completeness(window);
        Ok(tree)
    }

    /// Bottom-up: a node is complete when its cell avoids the window
    /// boundary and all of its children are complete (edge cells need no
    /// children; their chains are arithmetic).
    fn compute_completeness(&mut self, window: &Window) {
        let heights: Vec<i32> = self.levels.keys().copied().rev().collect();
        for h in heights {
            let child_complete: Option<Vec<bool>> = self
                .levels
                .get(&(h + 1))
                .map(|lv| lv.complete.clone());
            let child_parent: Option<Vec<u32>> = self.levels.get(&(h + 1)).map(|lv| lv.parent.clone());
            let lv = self.levels.get(&h).unwrap();
            let mut complete = vec![true; lv.len()];
            for i in 0..lv.len() {
                for &x in lv.cell(i as u32) {
                    if window.is_boundary(x) {
                        complete[i] = false;
                        break;
                    }
                }
            }
            // Children completeness propagates upward for non-edge cells.
            let mut has_child = vec![false; lv.len()];
            if let (Some(cc), Some(cp)) = (child_complete, child_parent) {
                for (ci, &p) in cp.iter().enumerate() {
                    if p != NO_PARENT {
                        has_child[p as usize] = true;
                        if !cc[ci] {
                            complete[p as usize] = false;
                        }
                    }
                }
            }
            for i in 0..lv.len() {
                if !lv.lambda_e[i] && !has_child[i] {
                    // Interior node with no materialized children: only
                    // legitimate at the finest stored level if it is an edge
                    // cell; otherwise the window cut it off.
                    complete[i] = false;
                }
            }
            self.levels.get_mut(&h).unwrap().complete = complete;
        }
    }

    pub fn heights(&self) -> (i32, i32) {
        let min = *self.levels.keys().next().expect("nonempty tree");
        let max = *self.levels.keys().last().expect("nonempty tree");
        (min, max)
    }

    /// Force nodes incomplete (used by generators for cells whose true
    /// extent reaches past the generated region without touching a boundary
    /// vertex) and re-propagate incompleteness to ancestors.
    pub fn veto_completeness(&mut self, veto: &[(i32, u32)]) {
        for &(h, i) in veto {
            if let Some(lv) = self.levels.get_mut(&h) {
                if (i as usize) < lv.complete.len() {
                    lv.complete[i as usize] = false;
                }
            }
        }
        let heights: Vec<i32> = self.levels.keys().copied().rev().collect();
        for h in heights {
            let incomplete_parents: Vec<u32> = {
                let lv = &self.levels[&h];
                (0..lv.len())
                    .filter(|&i| !lv.complete[i] && lv.parent[i] != NO_PARENT)
                    .map(|i| self.levels[&h].parent[i])
                    .collect()
            };
            if let Some(up) = self.levels.get_mut(&(h - 1)) {
                for p in incomplete_parents {
                    up.complete[p as usize] = false;
                }
            }
        }
    }

    pub fn level(&self, h: i32) -> Option<&Level> {
        self.levels.get(&h)
    }

    pub fn te_node_count(&self) -> usize {
        self.levels.values().map(|l| l.len()).sum()
    }

    pub fn subdivide(&self, r: f64) -> Result<PartitionTree> {
        if !(r > 0.0 && r < 1.0) {
            return Err(Error::InvalidParam(format!(
                "subdivision ratio must lie in (0,1), got {r}"
            )));
        }
        let mut t = self.clone();
        t.subdivision = Some(Subdivision { r });
        Ok(t)
    }

    fn lambda_by_vertex(&self) -> &HashMap<VIdx, Vec<NodeId>> {
        self.lambda_by_vertex.get_or_init(|| {
            let mut map: HashMap<VIdx, Vec<NodeId>> = HashMap::new();
            for (&h, lv) in &self.levels {
                for i in 0..lv.len() as u32 {
                    if lv.lambda_e[i as usize] {
                        for &x in lv.cell(i) {
                            map.entry(x).or_default().push(NodeId { height: h, idx: i });
                        }
                    }
                }
            }
            map
        })
    }

    pub fn is_lambda_e(&self, n: NodeId) -> bool {
        self.levels[&n.height].lambda_e[n.idx as usize]
    }

    pub fn is_complete(&self, n: NodeRef) -> bool {
        match n {
            NodeRef::Te(id) => self.levels[&id.height].complete[id.idx as usize],
            NodeRef::Chain { edge, .. } => self.levels[&edge.height].complete[edge.idx as usize],
        }
    }

    /// Full cell K_w. Chain cells carry their edge cell's two vertices.
    pub fn cell(&self, n: NodeRef) -> &[VIdx] {
        match n {
            NodeRef::Te(id) => self.levels[&id.height].cell(id.idx),
            NodeRef::Chain { edge, .. } => self.levels[&edge.height].cell(edge.idx),
        }
    }

    /// Underline cell: what counts for horizontal adjacency. Interior chain
    /// cells have no vertices of their own; endpoint cells expose the edge
    /// endpoint they touch.
    pub fn underline_cell(&self, n: NodeRef) -> Vec<VIdx> {
        match n {
            NodeRef::Te(id) => self.levels[&id.height].cell(id.idx).to_vec(),
            NodeRef::Chain { edge, depth, pos } => {
                let cell = self.levels[&edge.height].cell(edge.idx);
                let sub = self.subdivision.expect("chain node without subdivision");
                let width = 1u64 << sub.n_of(depth);
                let mut out = Vec::new();
                if pos == 0 {
                    out.push(cell[0]);
                }
                if pos == width - 1 {
                    out.push(cell[1]);
                }
                out
            }
        }
    }

    pub fn parent(&self, n: NodeRef) -> Option<NodeRef> {
        match n {
            NodeRef::Te(id) => {
                let p = self.levels[&id.height].parent[id.idx as usize];
                if p == NO_PARENT {
                    return None;
                }
                Some(NodeRef::Te(NodeId {
                    height: id.height - 1,
                    idx: p,
                }))
            }
            NodeRef::Chain { edge, depth, pos } => {
                if depth == 1 {
                    return Some(NodeRef::Te(edge));
                }
                let sub = self.subdivision.expect("chain node without subdivision");
                let shift = sub.n_of(depth) - sub.n_of(depth - 1);
                Some(NodeRef::Chain {
                    edge,
                    depth: depth - 1,
                    pos: pos >> shift,
                })
            }
        }
    }

    fn te_children(&self, id: NodeId) -> &[u32] {
        static EMPTY: Vec<u32> = Vec::new();
        match self.levels.get(&(id.height + 1)) {
            None => &EMPTY,
            Some(next) => {
                let lv = &self.levels[&id.height];
                let lists = lv.children.get_or_init(|| {
                    let mut lists = vec![Vec::new(); lv.len()];
                    for (ci, &p) in next.parent.iter().enumerate() {
                        if p != NO_PARENT {
                            lists[p as usize].push(ci as u32);
                        }
                    }
                    lists
                });
                &lists[id.idx as usize]
            }
        }
    }

    /// S(w): children in the subdivided tree.
    pub fn children(&self, n: NodeRef) -> Vec<NodeRef> {
        match n {
            NodeRef::Te(id) => {
                if self.is_lambda_e(id) {
                    match self.subdivision {
                        None => Vec::new(),
                        Some(sub) => {
                            let width = 1u64 << sub.n_of(1);
                            (0..width)
                                .map(|pos| NodeRef::Chain {
                                    edge: id,
                                    depth: 1,
                                    pos,
                                })
                                .collect()
                        }
                    }
                } else {
                    let h = id.height + 1;
                    self.te_children(id)
                        .iter()
                        .map(|&ci| NodeRef::Te(NodeId { height: h, idx: ci }))
                        .collect()
                }
            }
            NodeRef::Chain { edge, depth, pos } => {
                let sub = self.subdivision.expect("chain node without subdivision");
                let shift = sub.n_of(depth + 1) - sub.n_of(depth);
                let base = pos << shift;
                (0..(1u64 << shift))
                    .map(|d| NodeRef::Chain {
                        edge,
                        depth: depth + 1,
                        pos: base + d,
                    })
                    .collect()
            }
        }
    }

    /// S^k(w): descendants k levels below w.
    pub fn descendants(&self, n: NodeRef, k: u32) -> Vec<NodeRef> {
        let mut cur = vec![n];
        for _ in 0..k {
            let mut next = Vec::with_capacity(cur.len() * 2);
            for m in cur {
                next.extend(self.children(m));
            }
            cur = next;
        }
        cur
    }

    /// #S^k(w) without materializing the set.
    pub fn descendant_count(&self, n: NodeRef, k: u32) -> u64 {
        if k == 0 {
            return 1;
        }
        match n {
            NodeRef::Te(id) if !self.is_lambda_e(id) => self
                .children(NodeRef::Te(id))
                .into_iter()
                .map(|c| self.descendant_count(c, k - 1))
                .sum(),
            _ => {
                // Chains grow by exact powers of two.
                let sub = match self.subdivision {
                    Some(s) => s,
                    None => return 0,
                };
                let exp = match n {
                    NodeRef::Chain { depth, .. } => sub.n_of(depth + k) - sub.n_of(depth),
                    _ => sub.n_of(k),
                };
                1u64 << exp
            }
        }
    }

    /// All nodes of (T_r)_m inside the window. Edge cells above m spawn
    /// their chain cells at the right depth.
    pub fn level_nodes(&self, m: i32) -> Result<Vec<NodeRef>> {
        let (h_min, _) = self.heights();
        let mut out = Vec::new();
        if let Some(lv) = self.levels.get(&m) {
            for i in 0..lv.len() as u32 {
                out.push(NodeRef::Te(NodeId { height: m, idx: i }));
            }
        }
        if let Some(sub) = self.subdivision {
            for (&h, lv) in self.levels.range(h_min..m) {
                let depth = (m - h) as u32;
                if depth == 0 {
                    continue;
                }
                for i in 0..lv.len() as u32 {
                    if lv.lambda_e[i as usize] {
                        let width = 1u64 << sub.n_of(depth);
                        for pos in 0..width {
                            out.push(NodeRef::Chain {
                                edge: NodeId { height: h, idx: i },
                                depth,
                                pos,
                            });
                        }
                    }
                }
            }
        }
        if out.is_empty() {
            let (lo, hi) = self.heights();
            return Err(Error::LevelOutOfWindow(m, lo, hi));
        }
        Ok(out)
    }

    /// J^h neighbors of one node at its own level: cells whose underline
    /// cells intersect, plus consecutive chain cells.
    pub fn h_neighbors(&self, n: NodeRef) -> Vec<NodeRef> {
        let m = n.height();
        let mut out: Vec<NodeRef> = Vec::new();
        if let NodeRef::Chain { edge, depth, pos } = n {
            let sub = self.subdivision.expect("chain node without subdivision");
            let width = 1u64 << sub.n_of(depth);
            if pos > 0 {
                out.push(NodeRef::Chain {
                    edge,
                    depth,
                    pos: pos - 1,
                });
            }
            if pos + 1 < width {
                out.push(NodeRef::Chain {
                    edge,
                    depth,
                    pos: pos + 1,
                });
            }
        }
        for x in self.underline_cell(n) {
            // Stored cells at level m containing x.
            if let Some(lv) = self.levels.get(&m) {
                if let Some(list) = lv.vtx_index().get(&x) {
                    for &i in list {
                        let cand = NodeRef::Te(NodeId { height: m, idx: i });
                        if cand != n {
                            out.push(cand);
                        }
                    }
                }
            }
            // Chain endpoint cells at level m from edge cells above m.
            if let Some(sub) = self.subdivision {
                if let Some(list) = self.lambda_by_vertex().get(&x) {
                    for &e in list {
                        if e.height >= m {
                            continue;
                        }
                        let depth = (m - e.height) as u32;
                        let width = 1u64 << sub.n_of(depth);
                        let cell = self.levels[&e.height].cell(e.idx);
                        let mut positions = Vec::new();
                        if cell[0] == x {
                            positions.push(0);
                        }
                        if cell[1] == x {
                            positions.push(width - 1);
                        }
                        for pos in positions {
                            let cand = NodeRef::Chain { edge: e, depth, pos };
                            if cand != n {
                                out.push(cand);
                            }
                        }
                    }
                }
            }
        }
        out.sort_unstable();
        out.dedup();
        out
    }

    /// Gamma_N(w): the J^h-ball of radius N around w at its level.
    pub fn gamma_ball(&self, w: NodeRef, n: u32) -> CertifiedNodes {
        let mut seen: HashSet<NodeRef> = HashSet::new();
        seen.insert(w);
        let mut frontier = vec![w];
        let mut truncated = !self.is_complete(w);
        for _ in 0..n {
            let mut next = Vec::new();
            for u in frontier {
                for v in self.h_neighbors(u) {
                    if seen.insert(v) {
                        if !self.is_complete(v) {
                            truncated = true;
                        }
                        next.push(v);
                    }
                }
            }
            frontier = next;
        }
        let mut nodes: Vec<NodeRef> = seen.into_iter().collect();
        nodes.sort_unstable();
        CertifiedNodes { nodes, truncated }
    }

    /// Build the full horizontal network of level m with its N=1 adjacency.
    pub fn horizontal_net(&self, m: i32, _n_fat: u32) -> Result<HorizontalNet> {
        let nodes = self.level_nodes(m)?;
        let index: HashMap<NodeRef, u32> = nodes
            .iter()
            .enumerate()
            .map(|(i, &n)| (n, i as u32))
            .collect();
        let mut pairs = vec![Vec::new(); nodes.len()];
        let mut truncated = false;
        for (i, &u) in nodes.iter().enumerate() {
            if !self.is_complete(u) {
                truncated = true;
            }
            for v in self.h_neighbors(u) {
                if let Some(&j) = index.get(&v) {
                    pairs[i].push(j);
                }
            }
        }
        for l in &mut pairs {
            l.sort_unstable();
            l.dedup();
        }
        let complete = nodes.iter().map(|&n| self.is_complete(n)).collect();
        Ok(HorizontalNet {
            level: m,
            nodes,
            index,
            pairs,
            complete,
            truncated,
        })
    }

    /// Lambda^g_s: nodes of T_e with g(w) <= s < g(pi(w)). Window-top nodes
    /// have unknown parent weight and are included with a truncation flag.
    pub fn scale_set(&self, g: &WeightFunction, s: f64) -> CertifiedNodes {
        let mut nodes = Vec::new();
        let mut truncated = false;
        for (&h, lv) in &self.levels {
            for i in 0..lv.len() as u32 {
                let id = NodeId { height: h, idx: i };
                let gw = g.eval(self, id);
                if gw > s {
                    continue;
                }
                match self.parent(NodeRef::Te(id)) {
                    Some(NodeRef::Te(p)) => {
                        if g.eval(self, p) > s {
                            nodes.push(NodeRef::Te(id));
                        }
                    }
                    _ => {
                        nodes.push(NodeRef::Te(id));
                        truncated = true;
                    }
                }
            }
        }
        nodes.sort_unstable();
        CertifiedNodes { nodes, truncated }
    }

    /// E^g_s adjacency restricted to a scale set: cells intersecting cells.
    fn scale_adjacency(&self, set: &[NodeRef]) -> Vec<Vec<u32>> {
        let mut by_vertex: HashMap<VIdx, Vec<u32>> = HashMap::new();
        for (i, &n) in set.iter().enumerate() {
            for &x in self.cell(n) {
                by_vertex.entry(x).or_default().push(i as u32);
            }
        }
        let mut adj = vec![Vec::new(); set.len()];
        for (_, list) in by_vertex {
            for a in 0..list.len() {
                for b in a + 1..list.len() {
                    adj[list[a] as usize].push(list[b]);
                    adj[list[b] as usize].push(list[a]);
                }
            }
        }
        for l in &mut adj {
            l.sort_unstable();
            l.dedup();
        }
        adj
    }

    /// Lambda^g_{s,1}(w)-style neighborhood around a scale-set member cell:
    /// the M-step ball of w in the cell-intersection adjacency of
    /// Lambda^g_s. Returns None when w is not in the scale set.
    pub fn scale_neighborhood(
        &self,
        g: &WeightFunction,
        s: f64,
        w: NodeRef,
        m_steps: u32,
    ) -> Option<(Vec<NodeRef>, bool)> {
        let set = self.scale_set(g, s);
        let pos = set.nodes.iter().position(|&n| n == w)?;
        let adj = self.scale_adjacency(&set.nodes);
        let mut seen: HashSet<u32> = HashSet::new();
        seen.insert(pos as u32);
        let mut frontier = vec![pos as u32];
        let mut truncated = set.truncated;
        for _ in 0..m_steps {
            let mut next = Vec::new();
            for u in frontier {
                for &v in &adj[u as usize] {
                    if seen.insert(v) {
                        next.push(v);
                    }
                }
            }
            frontier = next;
        }
        let mut out: Vec<NodeRef> = seen.into_iter().map(|i| set.nodes[i as usize]).collect();
        for &n in &out {
            if !self.is_complete(n) {
                truncated = true;
            }
        }
        out.sort_unstable();
        Some((out, truncated))
    }

    /// Is `anc` an ancestor of (or equal to) node `n`?
    pub fn in_subtree(&self, n: NodeRef, anc: NodeRef) -> bool {
        let mut cur = n;
        loop {
            if cur == anc {
                return true;
            }
            if cur.height() <= anc.height() {
                return false;
            }
            match self.parent(cur) {
                Some(p) => cur = p,
                None => return false,
            }
        }
    }

    /// Lambda^g_{s,M}(x): M-step E^g_s neighborhood of the scale-set cells
    /// containing x.
    pub fn lambda_s_m(
        &self,
        g: &WeightFunction,
        x: VIdx,
        s: f64,
        m_steps: u32,
    ) -> (Vec<NodeRef>, bool) {
        let set = self.scale_set(g, s);
        let adj = self.scale_adjacency(&set.nodes);
        let mut seeds = Vec::new();
        for (i, &n) in set.nodes.iter().enumerate() {
            if self.cell(n).binary_search(&x).is_ok() {
                seeds.push(i as u32);
            }
        }
        let mut seen: HashSet<u32> = seeds.iter().copied().collect();
        let mut frontier = seeds;
        let mut truncated = set.truncated;
        for _ in 0..m_steps {
            let mut next = Vec::new();
            for u in frontier {
                for &v in &adj[u as usize] {
                    if seen.insert(v) {
                        next.push(v);
                    }
                }
            }
            frontier = next;
        }
        let mut out: Vec<NodeRef> = seen.into_iter().map(|i| set.nodes[i as usize]).collect();
        for &n in &out {
            if !self.is_complete(n) {
                truncated = true;
            }
        }
        out.sort_unstable();
        (out, truncated)
    }

    /// U^g_M(x, s): union of the Lambda^g_{s,M}(x) cells, or {x} if empty.
    pub fn u_neighborhood(
        &self,
        g: &WeightFunction,
        x: VIdx,
        s: f64,
        m_steps: u32,
    ) -> (Vec<VIdx>, bool) {
        let (cells, truncated) = self.lambda_s_m(g, x, s, m_steps);
        if cells.is_empty() {
            return (vec![x], truncated);
        }
        let mut out = Vec::new();
        for n in cells {
            out.extend_from_slice(self.cell(n));
        }
        out.sort_unstable();
        out.dedup();
        (out, truncated)
    }

    /// Check PG1-PG3, minimality, cell connectedness, and Lambda_e
    /// uniqueness over the window.
    pub fn verify(&self, window: &Window) -> PartitionReport {
        let mut pg1 = AxiomCheck::pass(0);
        let mut pg2 = AxiomCheck::pass(0);
        let mut minimal = AxiomCheck::pass(0);
        let mut connected = AxiomCheck::pass(0);
        let mut lambda_unique = AxiomCheck::pass(0);

        let mut lambda_cells: HashMap<Vec<VIdx>, NodeId> = HashMap::new();
        for (&h, lv) in &self.levels {
            for i in 0..lv.len() as u32 {
                let id = NodeId { height: h, idx: i };
                let node = NodeRef::Te(id);
                let cell = lv.cell(i);
                // PG1 on complete non-edge nodes.
                if lv.complete[i as usize] && !lv.lambda_e[i as usize] {
                    pg1.checked += 1;
                    let mut union: Vec<VIdx> = Vec::new();
                    for &c in self.te_children(id) {
                        union.extend_from_slice(self.levels[&(h + 1)].cell(c));
                    }
                    union.sort_unstable();
                    union.dedup();
                    if pg1.pass && union != cell {
                        pg1 = AxiomCheck::fail(
                            pg1.checked,
                            format!("PG1 fails at height {h} idx {i}: child union differs"),
                        );
                    }
                }
                // PG2: edge cells are adjacent 2-point sets.
                if lv.lambda_e[i as usize] {
                    pg2.checked += 1;
                    let ok = cell.len() == 2 && window.graph.has_edge(cell[0], cell[1]);
                    if pg2.pass && !ok {
                        pg2 = AxiomCheck::fail(
                            pg2.checked,
                            format!("PG2 fails at height {h} idx {i}: cell {cell:?}"),
                        );
                    }
                    // Minimality: no two Lambda_e nodes share a cell.
                    minimal.checked += 1;
                    if let Some(prev) = lambda_cells.insert(cell.to_vec(), id) {
                        if minimal.pass {
                            minimal = AxiomCheck::fail(
                                minimal.checked,
                                format!(
                                    "duplicate edge cell {:?} at ({},{}) and ({},{})",
                                    cell, prev.height, prev.idx, h, i
                                ),
                            );
                        }
                    }
                    // Uniqueness: no Lambda_e ancestor above a Lambda_e node.
                    lambda_unique.checked += 1;
                    let mut cur = self.parent(node);
                    while let Some(NodeRef::Te(p)) = cur {
                        if self.is_lambda_e(p) {
                            if lambda_unique.pass {
                                lambda_unique = AxiomCheck::fail(
                                    lambda_unique.checked,
                                    format!(
                                        "Lambda_e node ({},{}) below Lambda_e ancestor ({},{})",
                                        h, i, p.height, p.idx
                                    ),
                                );
                            }
                            break;
                        }
                        cur = self.parent(NodeRef::Te(p));
                    }
                } else if lv.complete[i as usize] && cell.len() <= 2 {
                    // A complete 2-point interior cell must still descend to
                    // an edge cell; a stored non-edge 2-point cell whose
                    // parent is also 2-point would break uniqueness.
                    if let Some(NodeRef::Te(p)) = self.parent(node) {
                        let pc = self.levels[&p.height].cell(p.idx);
                        if pc.len() == 2 && lambda_unique.pass {
                            lambda_unique = AxiomCheck::fail(
                                lambda_unique.checked,
                                format!("chain-like 2-point cell stored in T_e at ({h},{i})"),
                            );
                        }
                    }
                }
                // Connectedness of complete cells in the induced subgraph.
                if lv.complete[i as usize] {
                    connected.checked += 1;
                    if connected.pass && !cell_connected(window, cell) {
                        connected = AxiomCheck::fail(
                            connected.checked,
                            format!("disconnected cell at height {h} idx {i}"),
                        );
                    }
                }
            }
        }

        // PG3: every interior edge appears as some Lambda_e cell, and
        // minimality also demands it is covered by exactly one of them.
        let mut pg3 = AxiomCheck::pass(0);
        let mut edge_cover: HashMap<(VIdx, VIdx), usize> = HashMap::new();
        for (&h, lv) in &self.levels {
            for i in 0..lv.len() as u32 {
                if !lv.lambda_e[i as usize] {
                    continue;
                }
                let cell = lv.cell(i);
                for (ai, &a) in cell.iter().enumerate() {
                    for &b in &cell[ai + 1..] {
                        if window.graph.has_edge(a, b) {
                            *edge_cover.entry((a.min(b), a.max(b))).or_insert(0) += 1;
                        }
                    }
                }
            }
            let _ = h;
        }
        for (u, v) in window.graph.edges() {
            let key = (u.min(v), u.max(v));
            let cover = edge_cover.get(&key).copied().unwrap_or(0);
            if minimal.pass && cover > 1 {
                minimal = AxiomCheck::fail(
                    minimal.checked,
                    format!(
                        "edge ({}, {}) lies in {} edge cells",
                        window.graph.id(u).0,
                        window.graph.id(v).0,
                        cover
                    ),
                );
            }
            if window.is_boundary(u) || window.is_boundary(v) {
                continue;
            }
            pg3.checked += 1;
            if cover == 0 && pg3.pass {
                pg3 = AxiomCheck::fail(
                    pg3.checked,
                    format!(
                        "edge ({}, {}) has no edge cell",
                        window.graph.id(u).0,
                        window.graph.id(v).0
                    ),
                );
            }
        }

        PartitionReport {
            pg1,
            pg2,
            pg3,
            minimal,
            connected,
            lambda_unique,
        }
    }

    pub fn to_json(&self, window: &Window) -> serde_json::Value {
        let mut levels = Vec::new();
        for (&h, lv) in &self.levels {
            let nodes: Vec<serde_json::Value> = (0..lv.len() as u32)
                .map(|i| {
                    serde_json::json!({
                        "parent": if lv.parent[i as usize] == NO_PARENT { serde_json::Value::Null } else { serde_json::json!(lv.parent[i as usize]) },
                        "cell": lv.cell(i).iter().map(|&x| window.graph.id(x).0).collect::<Vec<u64>>(),
                        "lambda_e": lv.lambda_e[i as usize],
                        "complete": lv.complete[i as usize],
                    })
                })
                .collect();
            levels.push(serde_json::json!({"height": h, "nodes": nodes}));
        }
        serde_json::json!({
            "levels": levels,
            "subdivision": self.subdivision,
        })
    }
}

impl HorizontalNet {
    /// Pairs at J^h distance in (0, N]: the fattened edge set J^h_{N,m}.
    pub fn fattened_pairs(&self, n_fat: u32) -> Vec<(u32, u32)> {
        let mut out = Vec::new();
        for src in 0..self.nodes.len() as u32 {
            let mut dist: HashMap<u32, u32> = HashMap::new();
            dist.insert(src, 0);
            let mut queue = VecDeque::new();
            queue.push_back(src);
            while let Some(u) = queue.pop_front() {
                let du = dist[&u];
                if du >= n_fat {
                    continue;
                }
                for &v in &self.pairs[u as usize] {
                    if let std::collections::hash_map::Entry::Vacant(e) = dist.entry(v) {
                        e.insert(du + 1);
                        queue.push_back(v);
                    }
                }
            }
            for (&v, &d) in &dist {
                if d > 0 && src < v {
                    out.push((src, v));
                }
            }
        }
        out.sort_unstable();
        out
    }

    /// Gamma_N ball inside this net.
    pub fn gamma_ball(&self, w: u32, n: u32) -> (Vec<u32>, bool) {
        let mut seen: HashSet<u32> = HashSet::new();
        seen.insert(w);
        let mut frontier = vec![w];
        let mut truncated = !self.complete[w as usize];
        for _ in 0..n {
            let mut next = Vec::new();
            for u in frontier {
                for &v in &self.pairs[u as usize] {
                    if seen.insert(v) {
                        if !self.complete[v as usize] {
                            truncated = true;
                        }
                        next.push(v);
                    }
                }
            }
            frontier = next;
        }
        let mut nodes: Vec<u32> = seen.into_iter().collect();
        nodes.sort_unstable();
        (nodes, truncated)
    }

    pub fn to_dot(&self) -> String {
        let mut s = String::from("graph horizontal_net {\n");
        for (i, list) in self.pairs.iter().enumerate() {
            for &j in list {
                if (i as u32) < j {
                    let _ = writeln!(s, "  n{} -- n{};", i, j);
                }
            }
        }
        s.push_str("}\n");
        s
    }
}

fn cell_connected(window: &Window, cell: &[VIdx]) -> bool {
    if cell.len() <= 1 {
        return true;
    }
    let inset: HashSet<VIdx> = cell.iter().copied().collect();
    let mut seen = HashSet::new();
    seen.insert(cell[0]);
    let mut queue = VecDeque::new();
    queue.push_back(cell[0]);
    while let Some(u) = queue.pop_front() {
        for &v in window.graph.neighbors(u) {
            if inset.contains(&v) && seen.insert(v) {
                queue.push_back(v);
            }
        }
    }
    seen.len() == cell.len()
}

/// Weight function on T_e. Geometric weights are evaluated as r^{height};
/// tabulated weights come from a metric or a custom assignment.
#[derive(Debug, Clone)]
pub enum WeightFunction {
    Geometric { r: f64 },
    PerNode { values: BTreeMap<i32, Vec<f64>>, label: &'static str },
}

impl WeightFunction {
    pub fn eval(&self, _tree: &PartitionTree, id: NodeId) -> f64 {
        match self {
            WeightFunction::Geometric { r } => r.powi(id.height),
            WeightFunction::PerNode { values, .. } => values[&id.height][id.idx as usize],
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            WeightFunction::Geometric { .. } => "geometric",
            WeightFunction::PerNode { label, .. } => label,
        }
    }

    /// GG2: g(pi(w)) >= g(w) wherever both are stored.
    pub fn check_monotone(&self, tree: &PartitionTree) -> Option<String> {
        let (h_min, h_max) = tree.heights();
        for h in (h_min + 1)..=h_max {
            let lv = match tree.level(h) {
                Some(l) => l,
                None => continue,
            };
            for i in 0..lv.len() as u32 {
                let id = NodeId { height: h, idx: i };
                if let Some(NodeRef::Te(p)) = tree.parent(NodeRef::Te(id)) {
                    let gw = self.eval(tree, id);
                    let gp = self.eval(tree, p);
                    if gp < gw - 1e-12 * gw.abs() {
                        return Some(format!(
                            "GG2 fails: g({},{}) = {gp} < g({},{}) = {gw}",
                            p.height, p.idx, h, i
                        ));
                    }
                }
            }
        }
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn subdivision_widths_match_bracketing() {
        // r = 1/2: n(m) = m exactly.
        let s = Subdivision { r: 0.5 };
        for m in 1..20 {
            assert_eq!(s.n_of(m), m);
        }
        // r = 1/3, m = 1: 2^-2 <= 1/3 < 2^-1 so n = 2 (4 chain cells).
        let s = Subdivision { r: 1.0 / 3.0 };
        assert_eq!(s.n_of(1), 2);
        // r = 0.9, m = 1: 2^-1 <= 0.9 < 2^0 so n = 1.
        let s = Subdivision { r: 0.9 };
        assert_eq!(s.n_of(1), 1);
    }

    #[test]
    fn chain_parent_child_consistency() {
        let s = Subdivision { r: 1.0 / 3.0 };
        // widths: n(1) = 2 -> 4 cells, n(2) = 4 -> 16 cells
        assert_eq!(s.n_of(2), 4);
        let shift = s.n_of(2) - s.n_of(1);
        for pos in 0u64..16 {
            let parent = pos >> shift;
            assert!(parent < 4);
        }
    }
}

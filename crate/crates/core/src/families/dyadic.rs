//! The dyadic unification of the half-line: vertices 0..2^depth with unit
//! edges, and the tree that merges 2^n consecutive edges into the cell
//! (n, a) covering [2^n (a-1), 2^n a].

use crate::error::{Error, Result};
use crate::graph::{Graph, Provenance, VertexId, Window};
use crate::partition::{LevelBuilder, PartitionTree, NO_PARENT};
use std::collections::BTreeMap;

pub fn dyadic_halfline(depth: u32) -> Result<(Window, PartitionTree)> {
    if depth == 0 || depth > 30 {
        return Err(Error::InvalidParam(format!(
            "dyadic depth must be in 1..=30, got {depth}"
        )));
    }
    let len = 1u64 << depth;
    let vertices: Vec<VertexId> = (0..=len).map(VertexId).collect();
    let edges: Vec<(VertexId, VertexId)> =
        (0..len).map(|i| (VertexId(i), VertexId(i + 1))).collect();
    let coords: Vec<(i64, i64)> = (0..=len).map(|i| (i as i64, 0)).collect();
    let graph = Graph::build(vertices, &edges, Some(coords))?;
    let window = Window::new(
        graph,
        &[VertexId(len)],
        Provenance {
            family: "dyadic-halfline".into(),
            depth,
        },
    )?;

    // Height -n holds the cells (n, a), a = 1..2^(depth-n); a-1 is the index.
    let mut builders: BTreeMap<i32, LevelBuilder> = BTreeMap::new();
    for n in (0..=depth).rev() {
        let count = 1u64 << (depth - n);
        let mut parent = Vec::with_capacity(count as usize);
        let mut cells = Vec::with_capacity(count as usize);
        let mut lambda_e = Vec::with_capacity(count as usize);
        for a in 1..=count {
            parent.push(if n == depth {
                NO_PARENT
            } else {
                ((a - 1) / 2) as u32
            });
            let lo = (1u64 << n) * (a - 1);
            let hi = (1u64 << n) * a;
            let cell: Vec<u32> = (lo..=hi)
                .map(|v| window.graph.idx(VertexId(v)).expect("generated vertex"))
                .collect();
            cells.push(cell);
            lambda_e.push(n == 0);
        }
        builders.insert(
            -(n as i32),
            LevelBuilder {
                parent,
                cells,
                lambda_e,
            },
        );
    }
    let tree = PartitionTree::assemble(builders, &window)?;
    let tree = tree.subdivide(0.5)?;
    Ok((window, tree))
}

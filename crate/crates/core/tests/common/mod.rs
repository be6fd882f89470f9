//! Independent oracles for the acceptance suite. Nothing here goes through
//! the library's IRLS/CG path: coordinate descent with exact line search
//! for p > 1, max-flow min-cut for p = 1, and dense Gaussian elimination
//! for quadratic spot checks.

#![allow(dead_code)]

use std::collections::VecDeque;

/// Value of sum w |f_u - f_v|^p at the given assignment.
pub fn p_energy_value(values: &[f64], edges: &[(u32, u32, f64)], p: f64) -> f64 {
    edges
        .iter()
        .map(|&(u, v, w)| {
            let d = (values[u as usize] - values[v as usize]).abs();
            if d == 0.0 {
                0.0
            } else {
                w * d.powf(p)
            }
        })
        .sum()
}

/// Cyclic coordinate descent with ternary-search line minimization. The
/// objective is convex and differentiable for p > 1, so exact coordinate
/// minimization converges to the global optimum.
pub fn coordinate_descent_min(
    n: usize,
    edges: &[(u32, u32, f64)],
    pinned: &[Option<f64>],
    p: f64,
    sweeps: usize,
) -> f64 {
    assert!(p > 1.0, "coordinate descent oracle needs p > 1");
    let mut incident: Vec<Vec<(u32, f64)>> = vec![Vec::new(); n];
    for &(u, v, w) in edges {
        incident[u as usize].push((v, w));
        incident[v as usize].push((u, w));
    }
    let mut values: Vec<f64> = pinned.iter().map(|b| b.unwrap_or(0.5)).collect();
    for _ in 0..sweeps {
        let mut delta: f64 = 0.0;
        for i in 0..n {
            if pinned[i].is_some() || incident[i].is_empty() {
                continue;
            }
            // Ternary search over the coordinate range.
            let mut lo = -0.5f64;
            let mut hi = 1.5f64;
            let local = |t: f64| -> f64 {
                incident[i]
                    .iter()
                    .map(|&(j, w)| {
                        let d = (t - values[j as usize]).abs();
                        if d == 0.0 {
                            0.0
                        } else {
                            w * d.powf(p)
                        }
                    })
                    .sum()
            };
            for _ in 0..200 {
                let m1 = lo + (hi - lo) / 3.0;
                let m2 = hi - (hi - lo) / 3.0;
                if local(m1) <= local(m2) {
                    hi = m2;
                } else {
                    lo = m1;
                }
            }
            let t = 0.5 * (lo + hi);
            delta = delta.max((values[i] - t).abs());
            values[i] = t;
        }
        if delta < 1e-13 {
            break;
        }
    }
    p_energy_value(&values, edges, p)
}

/// Max-flow (Edmonds-Karp) between contracted source and sink sets: the
/// exact minimum of sum w |f_u - f_v| with f pinned 1 on sources and 0 on
/// sinks, by the coarea formula.
pub fn min_cut_value(
    n: usize,
    edges: &[(u32, u32, f64)],
    sources: &[u32],
    sinks: &[u32],
) -> f64 {
    let s = n;
    let t = n + 1;
    let total = n + 2;
    // Residual adjacency: cap[u][v].
    let mut cap = vec![std::collections::HashMap::<usize, f64>::new(); total];
    let mut add = |cap: &mut Vec<std::collections::HashMap<usize, f64>>, u: usize, v: usize, c: f64| {
        *cap[u].entry(v).or_insert(0.0) += c;
        cap[v].entry(u).or_insert(0.0);
    };
    for &(u, v, w) in edges {
        add(&mut cap, u as usize, v as usize, w);
        add(&mut cap, v as usize, u as usize, w);
    }
    let inf = 1e18;
    for &u in sources {
        add(&mut cap, s, u as usize, inf);
    }
    for &u in sinks {
        add(&mut cap, u as usize, t, inf);
    }
    let mut flow = 0.0;
    loop {
        // BFS for an augmenting path.
        let mut parent: Vec<Option<usize>> = vec![None; total];
        parent[s] = Some(s);
        let mut queue = VecDeque::new();
        queue.push_back(s);
        while let Some(u) = queue.pop_front() {
            for (&v, &c) in &cap[u] {
                if c > 1e-12 && parent[v].is_none() {
                    parent[v] = Some(u);
                    queue.push_back(v);
                }
            }
        }
        if parent[t].is_none() {
            break;
        }
        let mut bottleneck = inf;
        let mut v = t;
        while v != s {
            let u = parent[v].unwrap();
            bottleneck = bottleneck.min(cap[u][&v]);
            v = u;
        }
        let mut v = t;
        while v != s {
            let u = parent[v].unwrap();
            *cap[u].get_mut(&v).unwrap() -= bottleneck;
            *cap[v].get_mut(&u).unwrap() += bottleneck;
            v = u;
        }
        flow += bottleneck;
    }
    flow
}

/// Dense Gaussian elimination for the quadratic Dirichlet problem; returns
/// the minimizing assignment over all nodes.
pub fn dense_quadratic_solve(
    n: usize,
    edges: &[(u32, u32, f64)],
    pinned: &[Option<f64>],
) -> Vec<f64> {
    let free: Vec<usize> = (0..n).filter(|&i| pinned[i].is_none()).collect();
    let pos: std::collections::HashMap<usize, usize> =
        free.iter().enumerate().map(|(k, &i)| (i, k)).collect();
    let m = free.len();
    let mut a = vec![vec![0.0f64; m]; m];
    let mut b = vec![0.0f64; m];
    for &(u, v, w) in edges {
        let (u, v) = (u as usize, v as usize);
        match (pos.get(&u), pos.get(&v)) {
            (Some(&i), Some(&j)) => {
                a[i][i] += w;
                a[j][j] += w;
                a[i][j] -= w;
                a[j][i] -= w;
            }
            (Some(&i), None) => {
                a[i][i] += w;
                b[i] += w * pinned[v].unwrap();
            }
            (None, Some(&j)) => {
                a[j][j] += w;
                b[j] += w * pinned[u].unwrap();
            }
            (None, None) => {}
        }
    }
    // Gaussian elimination with partial pivoting.
    for col in 0..m {
        let mut piv = col;
        for row in col + 1..m {
            if a[row][col].abs() > a[piv][col].abs() {
                piv = row;
            }
        }
        a.swap(col, piv);
        b.swap(col, piv);
        if a[col][col].abs() < 1e-300 {
            continue;
        }
        for row in col + 1..m {
            let factor = a[row][col] / a[col][col];
            for k in col..m {
                a[row][k] -= factor * a[col][k];
            }
            b[row] -= factor * b[col];
        }
    }
    let mut x = vec![0.0f64; m];
    for col in (0..m).rev() {
        let mut acc = b[col];
        for k in col + 1..m {
            acc -= a[col][k] * x[k];
        }
        x[col] = if a[col][col].abs() < 1e-300 {
            0.0
        } else {
            acc / a[col][col]
        };
    }
    let mut out: Vec<f64> = pinned.iter().map(|v| v.unwrap_or(0.0)).collect();
    for (k, &i) in free.iter().enumerate() {
        out[i] = x[k];
    }
    out
}

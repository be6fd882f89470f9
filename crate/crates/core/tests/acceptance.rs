//! Acceptance suite: one test per criterion, each printing a PASS line with
//! the measured quantities. Tolerances are pinned in the assertions.

mod common;

use arcdim::energy::{
    arc_dim_estimate, build_energy_problem, energy_pkw, solve_penergy, CellSampler, EnergyParams,
};
use arcdim::families::boxes::box_graph;
use arcdim::families::dyadic::dyadic_halfline;
use arcdim::families::gasket::{
    calibrate_multipliers, corner_resistance, deep_gasket_report, gasket_family, gasket_window,
};
use arcdim::families::FSpec;
use arcdim::graph::{Conductance, Graph, Provenance, VertexId, Window};
use arcdim::metrics::{GraphMetric, Metric};
use arcdim::partition::{NodeId, NodeRef, PartitionTree};
use arcdim::resistance::{
    heat_kernel_diag, reduce_two_terminal, walk_distribution, ResistanceNetwork, TruncationPolicy,
};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn unit_triangle() -> ResistanceNetwork {
    let vertices = vec![VertexId(0), VertexId(1), VertexId(2)];
    let edges = vec![
        (VertexId(0), VertexId(1)),
        (VertexId(1), VertexId(2)),
        (VertexId(0), VertexId(2)),
    ];
    let graph = Graph::build(vertices, &edges, None).unwrap();
    let window = Window::new(
        graph,
        &[],
        Provenance {
            family: "triangle".into(),
            depth: 0,
        },
    )
    .unwrap();
    ResistanceNetwork::unit(window)
}

fn gasket_net(f: &FSpec, depth: u32) -> (ResistanceNetwork, VertexId) {
    let (w, mu) = gasket_window(f, depth).unwrap();
    let far = w.graph.ids().iter().copied().max_by_key(|v| v.0 >> 32).unwrap();
    (ResistanceNetwork::new(w, mu), far)
}

#[test]
fn criterion_1_resistance_golden_values() {
    let tri = unit_triangle();
    let r = tri
        .resistance_ids(&[VertexId(0)], &[VertexId(2)], TruncationPolicy::Closed)
        .unwrap()
        .value;
    assert!((r - 2.0 / 3.0).abs() <= 1e-10, "triangle R = {r}");

    let mut worst: f64 = 0.0;
    for n in 1..=6u32 {
        let value = corner_resistance(&FSpec::Const(0), n).unwrap();
        let golden = (2.0 / 3.0) * (5.0f64 / 3.0).powi(n as i32);
        let rel = (value - golden).abs() / golden;
        worst = worst.max(rel);
        assert!(rel <= 1e-9, "level {n}: rel err {rel:.3e}");
    }
    println!(
        "ACCEPTANCE 1 resistance-golden: PASS (triangle exact to 1e-10, gasket levels 1..6 worst rel {worst:.2e})"
    );
}

#[test]
fn criterion_2_delta_y_consistency() {
    let mut worst: f64 = 0.0;
    for n in 1..=5u32 {
        let (net, far) = gasket_net(&FSpec::Const(0), n);
        let solver = net
            .resistance_ids(&[VertexId(0)], &[far], TruncationPolicy::Closed)
            .unwrap()
            .value;
        let reduced = reduce_two_terminal(&net, VertexId(0), far).unwrap();
        let rel = (solver - reduced).abs() / solver;
        worst = worst.max(rel);
        assert!(rel <= 1e-10, "level {n}: rel err {rel:.3e}");
    }
    println!("ACCEPTANCE 2 delta-wye: PASS (levels 1..5, worst rel {worst:.2e})");
}

#[test]
fn criterion_3_heat_kernel_slope() {
    // Exactness to 4096 steps needs the boundary farther than 2048.
    let (net, _far) = gasket_net(&FSpec::Const(0), 12);
    let series = heat_kernel_diag(&net, VertexId(0), 4096).unwrap();
    let n_hi = series.p2n.len() - 1; // 2048 double steps
    let n_lo = n_hi / 16;
    let slope = series.slope(n_lo, n_hi);
    let target = 3f64.ln() / 5f64.ln();
    assert!(
        (slope - target).abs() <= 0.05,
        "slope {slope:.4} vs log3/log5 = {target:.4}"
    );
    println!(
        "ACCEPTANCE 3 heat-slope: PASS (slope {slope:.4}, target {target:.4}, window depth 12, horizon 4096)"
    );
}

#[test]
fn criterion_4_formula_spectral_dimensions() {
    let (log_r0, log_r1) = calibrate_multipliers(4).unwrap();
    let rep = deep_gasket_report(&FSpec::CubePattern, 27, log_r0, log_r1).unwrap();
    let d_s_true = 2.0 * 3f64.ln() / 5f64.ln();
    let d_s2_true = 2.0 * 6f64.ln() / (90f64.ln() - 7f64.ln());
    assert!(
        (rep.d_s_walk - d_s_true).abs() <= 0.05,
        "d_S {} vs {d_s_true}",
        rep.d_s_walk
    );
    assert!(
        (rep.d_s2 - d_s2_true).abs() <= 0.05,
        "d^S_2 {} vs {d_s2_true}",
        rep.d_s2
    );
    assert!(
        rep.d_s2 - rep.d_s_walk > 0.01,
        "report must exhibit d^S_2 != d_S: {} vs {}",
        rep.d_s2,
        rep.d_s_walk
    );
    println!(
        "ACCEPTANCE 4 formula-dims: PASS (d_S {:.4} ~ {d_s_true:.4}, d^S_2 {:.4} ~ {d_s2_true:.4}, gap {:.4})",
        rep.d_s_walk,
        rep.d_s2,
        rep.d_s2 - rep.d_s_walk
    );
}

/// Cells of the identity-f box window containing a probe vertex at the
/// center of the largest box, one per height.
fn box_area_witnesses(window: &Window, tree: &PartitionTree, depth: u32) -> Vec<NodeRef> {
    let cx = 3 * (1i64 << (depth - 2));
    let cy = 1i64 << (depth - 2);
    let probe = window
        .graph
        .idx(VertexId(((cx as u64) << 32) | cy as u64))
        .expect("probe vertex exists in the filled box");
    let mut out = Vec::new();
    for m in 2..=(depth as i32 - 3) {
        let lv = match tree.level(-m) {
            Some(l) => l,
            None => continue,
        };
        for i in 0..lv.len() as u32 {
            if lv.complete[i as usize] && lv.cell(i).binary_search(&probe).is_ok() {
                out.push(NodeRef::Te(NodeId { height: -m, idx: i }));
                break;
            }
        }
    }
    out
}

#[test]
fn criterion_5_arc_dimension_dichotomy() {
    // f(n) = n at depth 10: the rate crossing brackets p = 2.
    let (w_id, t_id) = box_graph(&FSpec::Identity, 10).unwrap();
    let witnesses = box_area_witnesses(&w_id, &t_id, 10);
    assert!(witnesses.len() >= 3, "need witness cells, got {}", witnesses.len());
    let params = EnergyParams::new(0, 2, 1).unwrap();
    let ks: Vec<u32> = (1..=4).collect();
    let arc_id = arc_dim_estimate(
        &t_id,
        (1.2, 4.0),
        &ks,
        params,
        &CellSampler::Explicit(witnesses),
        0.2,
        1e-9,
    )
    .unwrap();
    assert!(
        arc_id.bracket.0 <= 2.0 && 2.0 <= arc_id.bracket.1,
        "bracket {:?} must contain 2",
        arc_id.bracket
    );
    assert!(arc_id.bracket.1 - arc_id.bracket.0 <= 0.2);

    // f = 0 at depth 10: the crossing sits at p = 1.
    let (w0, t0) = box_graph(&FSpec::Const(0), 10).unwrap();
    let arc_0 = arc_dim_estimate(
        &t0,
        (1.0, 3.0),
        &ks,
        params,
        &CellSampler::Certified { per_level_cap: 4 },
        0.2,
        1e-9,
    )
    .unwrap();
    assert!(
        arc_0.bracket.0 <= 1.0 + 1e-9 && 1.0 <= arc_0.bracket.1 + 1e-9,
        "bracket {:?} must contain 1",
        arc_0.bracket
    );
    assert!(arc_0.bracket.1 - arc_0.bracket.0 <= 0.2);

    // Counting measure of certified balls grows linearly for f = 0.
    let mut cbar: f64 = 0.0;
    let centers = [
        VertexId((1u64 << 32) | 0),
        VertexId((3u64 << 32) | 0),
        VertexId((16u64 << 32) | 8),
        VertexId((64u64 << 32) | 0),
    ];
    let mut checked = 0;
    for &c in &centers {
        if w0.graph.idx(c).is_err() {
            continue;
        }
        for r in [4.0f64, 8.0, 16.0, 32.0] {
            let ball = w0.graph_ball(c, r).unwrap();
            if ball.truncated {
                continue;
            }
            checked += 1;
            let v = ball.vertices.len() as f64;
            assert!(v >= r, "V(x, {r}) = {v} < r");
            cbar = cbar.max(v / r);
        }
    }
    assert!(checked >= 8, "need certified balls");
    assert!(cbar.is_finite() && cbar < 16.0);
    println!(
        "ACCEPTANCE 5 arc-dichotomy: PASS (f=id bracket {:?}, f=0 bracket {:?}, V/r <= {cbar:.2} on {checked} balls)",
        arc_id.bracket, arc_0.bracket
    );
}

#[test]
fn criterion_6_energy_resistance_duality() {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let mut worst: f64 = 0.0;
    for trial in 0..50 {
        let n = rng.gen_range(10..=200usize);
        let vertices: Vec<VertexId> = (0..n as u64).map(VertexId).collect();
        let mut edges: Vec<(VertexId, VertexId)> = Vec::new();
        // Random tree plus extra edges keeps it connected.
        for i in 1..n as u64 {
            let j = rng.gen_range(0..i);
            edges.push((VertexId(i), VertexId(j)));
        }
        for _ in 0..(n / 2) {
            let a = rng.gen_range(0..n as u64);
            let b = rng.gen_range(0..n as u64);
            if a != b {
                edges.push((VertexId(a), VertexId(b)));
            }
        }
        let graph = Graph::build(vertices, &edges, None).unwrap();
        let window = Window::new(
            graph,
            &[],
            Provenance {
                family: "random".into(),
                depth: trial,
            },
        )
        .unwrap();
        let net = ResistanceNetwork::unit(window);
        let a = rng.gen_range(0..n as u64);
        let mut b = rng.gen_range(0..n as u64);
        while b == a {
            b = rng.gen_range(0..n as u64);
        }
        let r = net
            .resistance_ids(&[VertexId(a)], &[VertexId(b)], TruncationPolicy::Closed)
            .unwrap()
            .value;

        // p = 2 energy with the same pins through the energy solver.
        let ai = net.graph().idx(VertexId(a)).unwrap() as usize;
        let bi = net.graph().idx(VertexId(b)).unwrap() as usize;
        let mut pinned: Vec<Option<f64>> = vec![None; n];
        pinned[ai] = Some(1.0);
        pinned[bi] = Some(0.0);
        let res = arcdim::energy::minimize_weighted_p(
            n,
            net.weighted_edges(),
            &pinned,
            2.0,
            1e-13,
            4 * n + 200,
        )
        .unwrap();
        let product = res.value * r;
        let rel = (product - 1.0).abs();
        worst = worst.max(rel);
        assert!(rel <= 1e-9, "trial {trial}: E*R = {product}");
    }
    println!("ACCEPTANCE 6 duality: PASS (50 nets, worst |E*R - 1| = {worst:.2e})");
}

#[test]
fn criterion_7_brute_force_oracle() {
    // Collect built-in instances with at most 12 free nodes.
    let mut instances: Vec<(usize, Vec<(u32, u32, f64)>, Vec<Option<f64>>)> = Vec::new();
    {
        let (_w, t) = dyadic_halfline(4).unwrap();
        for (idx, k, n1, n2) in [(7u32, 1u32, 0u32, 2u32), (5, 2, 0, 1), (9, 1, 0, 1)] {
            let w = NodeRef::Te(NodeId { height: 0, idx });
            let prob = build_energy_problem(&t, w, k, 2.0, EnergyParams::new(n1, n2, 1).unwrap())
                .unwrap();
            let (n, edges) = prob.weighted_edges();
            let pinned = prob.pinned();
            instances.push((n, edges, pinned));
        }
    }
    {
        let (_w, t, _mu) = gasket_family(&FSpec::Const(0), 3).unwrap();
        for idx in [0u32, 4] {
            let w = NodeRef::Te(NodeId { height: 1, idx });
            let prob =
                build_energy_problem(&t, w, 1, 2.0, EnergyParams::new(0, 1, 1).unwrap()).unwrap();
            let (n, edges) = prob.weighted_edges();
            let pinned = prob.pinned();
            instances.push((n, edges, pinned));
        }
    }
    let mut tested = 0;
    let mut worst: f64 = 0.0;
    for (n, edges, pinned) in instances {
        let free = pinned.iter().filter(|p| p.is_none()).count();
        if free == 0 || free > 12 {
            continue;
        }
        for p in [1.0f64, 1.5, 3.0] {
            let ours = arcdim::energy::minimize_weighted_p(n, &edges, &pinned, p, 1e-10, 400)
                .unwrap()
                .value;
            let oracle = if p == 1.0 {
                let sources: Vec<u32> = (0..n)
                    .filter(|&i| pinned[i] == Some(1.0))
                    .map(|i| i as u32)
                    .collect();
                let sinks: Vec<u32> = (0..n)
                    .filter(|&i| pinned[i] == Some(0.0))
                    .map(|i| i as u32)
                    .collect();
                common::min_cut_value(n, &edges, &sources, &sinks)
            } else {
                common::coordinate_descent_min(n, &edges, &pinned, p, 4000)
            };
            let rel = (ours - oracle).abs() / oracle.max(1e-300);
            worst = worst.max(rel);
            tested += 1;
            assert!(rel <= 1e-4, "p = {p}, free = {free}: {ours} vs oracle {oracle}");
        }
    }
    assert!(tested >= 12, "need enough small instances, got {tested}");
    println!("ACCEPTANCE 7 brute-force: PASS ({tested} instance/p pairs, worst rel {worst:.2e})");
}

#[test]
fn criterion_8_property_suites() {
    let mut violations = 0usize;

    // Partition axioms across the families at default depths.
    let mut axiom_count = 0;
    {
        let (w, t) = dyadic_halfline(6).unwrap();
        if !t.verify(&w).all_pass() {
            violations += 1;
        }
        axiom_count += 1;
        for f in [FSpec::Const(0), FSpec::Identity, FSpec::HalfFloor] {
            let (w, t) = box_graph(&f, 5).unwrap();
            if !t.verify(&w).all_pass() {
                violations += 1;
            }
            axiom_count += 1;
        }
        for (f, d) in [
            (FSpec::Const(0), 4u32),
            (FSpec::Const(1), 3),
            (FSpec::Explicit(vec![1, 0, 1]), 3),
        ] {
            let (w, t, _mu) = gasket_family(&f, d).unwrap();
            if !t.verify(&w).all_pass() {
                violations += 1;
            }
            axiom_count += 1;
        }
    }

    // Maximum principle on converged minimizers.
    {
        let (_w, t) = dyadic_halfline(6).unwrap();
        let cell = NodeRef::Te(NodeId { height: 0, idx: 31 });
        for p in [1.0, 1.5, 2.0, 3.0] {
            let res = energy_pkw(&t, cell, 3, p, EnergyParams::new(0, 2, 1).unwrap(), 1e-9).unwrap();
            if !res.converged
                || res
                    .minimizer
                    .iter()
                    .any(|&v| !(0.0..=1.0).contains(&v))
            {
                violations += 1;
            }
        }
    }

    // Rayleigh monotonicity under 100 random conductance bumps.
    {
        let (w, mu) = gasket_window(&FSpec::Const(0), 3).unwrap();
        let far = w.graph.ids().iter().copied().max_by_key(|v| v.0 >> 32).unwrap();
        let base_net = ResistanceNetwork::new(w.clone(), mu.clone());
        let base = base_net
            .resistance_ids(&[VertexId(0)], &[far], TruncationPolicy::Closed)
            .unwrap()
            .value;
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..100 {
            let mut bumped = mu.edge_mu.clone();
            let e = rng.gen_range(0..bumped.len());
            bumped[e] *= 1.0 + rng.gen_range(0.1..2.0);
            let net = ResistanceNetwork::new(w.clone(), Conductance::new(&w.graph, bumped).unwrap());
            let r = net
                .resistance_ids(&[VertexId(0)], &[far], TruncationPolicy::Closed)
                .unwrap()
                .value;
            if r > base + 1e-10 {
                violations += 1;
            }
        }
    }

    // Energy monotonicity in N1 and N2.
    {
        let (_w, t) = dyadic_halfline(7).unwrap();
        let cell = NodeRef::Te(NodeId { height: 0, idx: 63 });
        let v_base = energy_pkw(&t, cell, 3, 2.0, EnergyParams::new(0, 2, 1).unwrap(), 1e-10)
            .unwrap()
            .value;
        let v_sink = energy_pkw(&t, cell, 3, 2.0, EnergyParams::new(0, 3, 1).unwrap(), 1e-10)
            .unwrap()
            .value;
        let v_src = energy_pkw(&t, cell, 3, 2.0, EnergyParams::new(1, 3, 1).unwrap(), 1e-10)
            .unwrap()
            .value;
        if !(v_sink <= v_base + 1e-12 && v_src >= v_sink - 1e-12) {
            violations += 1;
        }
    }

    // Heat series: normalization, symmetry of h_n, monotone diagonal.
    {
        let (net, _far) = gasket_net(&FSpec::Const(0), 4);
        let probs = walk_distribution(&net, VertexId(0), 16).unwrap();
        if (probs.iter().sum::<f64>() - 1.0).abs() > 1e-12 {
            violations += 1;
        }
        let x = VertexId(0);
        let y = net.graph().id(5);
        let px = walk_distribution(&net, x, 9).unwrap();
        let py = walk_distribution(&net, y, 9).unwrap();
        let xi = net.graph().idx(x).unwrap() as usize;
        let yi = net.graph().idx(y).unwrap() as usize;
        let hxy = px[yi] / net.mu.vertex_mu[yi];
        let hyx = py[xi] / net.mu.vertex_mu[xi];
        if (hxy - hyx).abs() > 1e-12 {
            violations += 1;
        }
        let series = heat_kernel_diag(&net, VertexId(0), 14).unwrap();
        if series.p2n.windows(2).any(|w| w[1] > w[0] + 1e-15) {
            violations += 1;
        }
    }

    // Graph-metric triangle inequality over sampled triples.
    {
        for window in [
            dyadic_halfline(5).unwrap().0,
            box_graph(&FSpec::HalfFloor, 4).unwrap().0,
            gasket_window(&FSpec::Const(0), 3).unwrap().0,
        ] {
            let d = GraphMetric::new(&window);
            let n = window.graph.len() as u32;
            let step = (n / 7).max(1);
            for x in (0..n).step_by(step as usize) {
                for y in (0..n).step_by(step as usize) {
                    for z in (0..n).step_by(step as usize) {
                        let (a, b, c) = (d.dist(x, z), d.dist(x, y), d.dist(y, z));
                        if a.is_finite() && b.is_finite() && c.is_finite() && a > b + c + 1e-9 {
                            violations += 1;
                        }
                    }
                }
            }
        }
    }

    assert_eq!(violations, 0, "property violations detected");
    println!(
        "ACCEPTANCE 8 property-suites: PASS (zero violations; {axiom_count} partitions verified)"
    );
}

#[test]
fn criterion_9_dyadic_closed_forms() {
    let (_w, t) = dyadic_halfline(8).unwrap();
    let sampler = CellSampler::Certified { per_level_cap: 16 };
    let params = EnergyParams::new(0, 2, 1).unwrap();
    let ks: Vec<u32> = (3..=8).collect();
    let mut worst: f64 = 0.0;
    for p in [1.0, 1.5, 2.0, 3.0] {
        let est = arcdim::energy::rate_rp(&t, p, &ks, params, &sampler, 1e-9).unwrap();
        let expect = 2f64.powf(1.0 - p);
        let rel = (est.rate_fit - expect).abs() / expect;
        worst = worst.max(rel);
        assert!(rel < 0.05, "p = {p}: rate {} vs {expect}", est.rate_fit);

        // Brute-force cross-check on the explicit path at k = 3: the side
        // ramps give 2 (2*8 + 1)^(1-p); for p = 2 also a dense solve.
        let cell = NodeRef::Te(NodeId { height: 0, idx: 127 });
        let prob = build_energy_problem(&t, cell, 3, p, params).unwrap();
        let (n, edges) = prob.weighted_edges();
        let pinned = prob.pinned();
        let ours = solve_penergy(&prob, 1e-10, 300).unwrap().value;
        let formula = 2.0 * 17f64.powf(1.0 - p);
        assert!(
            (ours - formula).abs() / formula < 1e-5,
            "p = {p}: {ours} vs formula {formula}"
        );
        if p == 2.0 {
            let dense = common::dense_quadratic_solve(n, &edges, &pinned);
            let dense_val = common::p_energy_value(&dense, &edges, 2.0);
            assert!((ours - dense_val).abs() / dense_val < 1e-9);
        }
    }
    let arc = arc_dim_estimate(&t, (1.0, 3.0), &ks, params, &sampler, 0.05, 1e-9).unwrap();
    assert!(
        (arc.estimate - 1.0).abs() <= 0.05,
        "arc estimate {}",
        arc.estimate
    );
    println!(
        "ACCEPTANCE 9 dyadic-closed-forms: PASS (worst rate rel {worst:.3}, arc estimate {:.4})",
        arc.estimate
    );
}

//! End-to-end acceptance checks. Each test covers one numbered criterion
//! and prints a single `criterion N: PASS/FAIL (...)` line; run with
//! `cargo test --test acceptance -- --nocapture` to see every line.

use std::time::Instant;

use nodectl_core::dynamics::integrate::{flow_endpoint, Method};
use nodectl_core::dynamics::{
    integrate_euler, integrate_rk4, propagate_damped, propagate_forced, reference_endpoint,
    Activation, Architecture, ControlSchedule, ControlValues, ModelSpec, PhasePoint,
};
use nodectl_core::experiments::{
    boundary_topology_probe, run_disk_experiment, run_tracking_experiment, BoundaryTopology,
    DiskConfig, TrackingConfig,
};
use nodectl_core::memory_control::{
    build_surrogate, memory_simultaneous_control, tracked_sup_error, tracking_control,
    MemoryControlProblem, SampledCurve,
};
use nodectl_core::momentum_control::{approximate_function, synthesize, ControlProblem, GridCell};
use nodectl_core::training::{
    forward_sample, gradient, loss, CurveDataset, EndpointDataset, LayerParams, LossKind,
    Readout, TrainGrid, TrainableParams,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn report(criterion: usize, pass: bool, detail: String) {
    println!(
        "criterion {criterion}: {} ({detail})",
        if pass { "PASS" } else { "FAIL" }
    );
    assert!(pass, "criterion {criterion} failed: {detail}");
}

#[test]
fn criterion_1_closed_forms_match_the_reference_integrator() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let spec = ModelSpec::momentum(1, Activation::Relu);
    let mut worst = 0.0_f64;
    for _ in 0..1000 {
        let x0 = rng.gen_range(-5.0..5.0);
        let p0 = rng.gen_range(-5.0..5.0);
        let q = rng.gen_range(-5.0..5.0);
        let t = rng.gen_range(0.01..10.0);
        let pt = PhasePoint::new(vec![x0], vec![p0]);

        // Free damped pair x' = p, p' = -p: zero controls.
        let mut free = ControlSchedule::new(spec.clone(), 0.0, t);
        free.push(t, ControlValues::Momentum { w: vec![0.0], a: vec![0.0], b: 0.0 });
        let end = flow_endpoint(&free, &pt, Method::Rk4, 256.0).unwrap();
        let (xf, pf) = propagate_damped(x0, p0, t);
        worst = worst.max((end.x[0] - xf).abs()).max((end.p[0] - pf).abs());

        // Constant forcing x' = p, p' = -p + q: w = q through a saturated
        // ReLU gate (argument pinned at 1).
        let mut forced = ControlSchedule::new(spec.clone(), 0.0, t);
        forced.push(t, ControlValues::Momentum { w: vec![q], a: vec![0.0], b: 1.0 });
        let end = flow_endpoint(&forced, &pt, Method::Rk4, 256.0).unwrap();
        let (xf, pf) = propagate_forced(x0, p0, q, t);
        worst = worst.max((end.x[0] - xf).abs()).max((end.p[0] - pf).abs());
    }
    let elapsed = start.elapsed().as_secs_f64();
    let pass = worst <= 1e-8 && elapsed < 10.0;
    report(
        1,
        pass,
        format!("max |closed form - RK4| {worst:.2e} over 1000 draws, {elapsed:.1}s"),
    );
}

/// Draws `n` vectors in [-1,1]^d whose pairwise L-inf distance is at least `sep`.
fn separated_points(rng: &mut ChaCha8Rng, n: usize, d: usize, sep: f64) -> Vec<Vec<f64>> {
    let mut out: Vec<Vec<f64>> = Vec::with_capacity(n);
    while out.len() < n {
        let cand: Vec<f64> = (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let ok = out.iter().all(|p| {
            p.iter()
                .zip(&cand)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0_f64, f64::max)
                >= sep
        });
        if ok {
            out.push(cand);
        }
    }
    out
}

#[test]
fn criterion_2_momentum_synthesis_lands_on_every_target() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst = 0.0_f64;
    let mut dup_problems = 0;
    let mut worst_segments = 0.0_f64;
    for case in 0..100 {
        let d = 2 + (case % 2);
        let n = 2 + (case % 9);
        let points = separated_points(&mut rng, n, d, 0.05);
        let mut targets = separated_points(&mut rng, n, d, 0.0);
        if case % 5 == 0 {
            targets[1] = targets[0].clone();
            dup_problems += 1;
        }
        let problem = ControlProblem::new(points.clone(), targets.clone(), 0.0, 10.0);
        let (schedule, _) = synthesize(&problem).unwrap();
        worst_segments =
            worst_segments.max(schedule.segments.len() as f64 / (8.0 * n as f64));
        for (point, target) in points.iter().zip(&targets) {
            let pt = PhasePoint::resting(point.clone(), d);
            let end = reference_endpoint(&schedule, &pt, 10.0).unwrap();
            for (got, want) in end.x.iter().zip(target) {
                worst = worst.max((got - want).abs());
            }
        }
    }
    let elapsed = start.elapsed().as_secs_f64();
    let pass = worst <= 1e-3 && worst_segments <= 1.0 && dup_problems >= 20 && elapsed < 120.0;
    report(
        2,
        pass,
        format!(
            "max endpoint error {worst:.2e} over 100 problems ({dup_problems} with duplicate \
             targets), worst segment budget use {:.0}%, {elapsed:.1}s",
            100.0 * worst_segments
        ),
    );
}

#[test]
fn criterion_3_memory_synthesis_steers_state_and_memory() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let dims = [(2, 2), (3, 2), (2, 3), (1, 1), (4, 2), (2, 4), (3, 3), (1, 2), (2, 1), (4, 4)];
    let mut worst = 0.0_f64;
    for case in 0..100 {
        let (d, d_p) = dims[case % dims.len()];
        let n = 2 + (case % 5);
        let joint = separated_points(&mut rng, 2 * n, d + d_p, 0.05);
        let split = |v: &Vec<f64>| PhasePoint::new(v[..d].to_vec(), v[d..].to_vec());
        let initials: Vec<PhasePoint> = joint[..n].iter().map(split).collect();
        let targets: Vec<PhasePoint> = joint[n..].iter().map(split).collect();
        let problem = MemoryControlProblem::new(d, d_p, initials.clone(), targets.clone(), 10.0)
            .unwrap();
        let schedule = memory_simultaneous_control(&problem).unwrap();
        for (init, target) in initials.iter().zip(&targets) {
            let end = reference_endpoint(&schedule, init, 10.0).unwrap();
            for (got, want) in end.x.iter().zip(&target.x).chain(end.p.iter().zip(&target.p)) {
                worst = worst.max((got - want).abs());
            }
        }
    }
    let elapsed = start.elapsed().as_secs_f64();
    let pass = worst <= 1e-3 && elapsed < 120.0;
    report(
        3,
        pass,
        format!("max endpoint error {worst:.2e} over 100 problems, {elapsed:.1}s"),
    );
}

#[test]
fn criterion_4_tracking_control_holds_the_requested_tube() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let t_end = 5.0;
    let mut worst = 0.0_f64;
    for _ in 0..20 {
        let mut curves = Vec::new();
        for _ in 0..3 {
            let m = 1 + rng.gen_range(0..3usize);
            let terms: Vec<(f64, f64, f64)> = (0..m)
                .map(|_| {
                    (
                        rng.gen_range(0.1..0.35) / m as f64,
                        rng.gen_range(0.3..2.0),
                        rng.gen_range(0.0..std::f64::consts::TAU),
                    )
                })
                .collect();
            let curve = SampledCurve::from_fn(0.0, t_end, 401, |t| {
                vec![terms.iter().map(|(a, w, p)| a * (w * t + p).sin()).sum()]
            })
            .unwrap();
            curves.push(curve);
        }
        let sources = vec![
            vec![rng.gen_range(0.05..0.3)],
            vec![rng.gen_range(0.4..0.6)],
            vec![rng.gen_range(0.7..0.95)],
        ];
        let (targets, sur) = build_surrogate(&curves, &sources, 8, 0.03).unwrap();
        assert!(sur.sup_error <= 0.03, "surrogate sup {:.3e}", sur.sup_error);
        let schedule = tracking_control(&targets, 2).unwrap();
        for tg in &targets {
            worst = worst.max(tracked_sup_error(&schedule, tg, 2000.0).unwrap());
        }
    }
    let elapsed = start.elapsed().as_secs_f64();
    let pass = worst < 0.05 && elapsed < 180.0;
    report(
        4,
        pass,
        format!("max sup-t tracking error {worst:.4} over 60 curves (budget 0.05), {elapsed:.1}s"),
    );
}

#[test]
fn criterion_5_staircase_approximation_meets_the_l2_budget() {
    let start = Instant::now();
    let cell = |lo: [f64; 2], hi: [f64; 2], value: [f64; 2]| GridCell {
        lo: lo.to_vec(),
        hi: hi.to_vec(),
        representative: vec![(lo[0] + hi[0]) / 2.0, (lo[1] + hi[1]) / 2.0],
        value: value.to_vec(),
    };
    let coarse = vec![
        cell([0.0, 0.0], [1.0, 1.0], [0.6, -0.2]),
        cell([1.0, 0.0], [2.0, 1.0], [-0.4, 0.5]),
    ];
    let fine = vec![
        cell([0.0, 0.0], [0.5, 1.0], [0.6, -0.2]),
        cell([0.5, 0.0], [1.0, 1.0], [0.6, -0.2]),
        cell([1.0, 0.0], [1.5, 1.0], [-0.4, 0.5]),
        cell([1.5, 0.0], [2.0, 1.0], [-0.4, 0.5]),
    ];

    // Sampled L2 distance between the schedule's endpoint map and f on a
    // lattice of cell-interior points (never on cut planes).
    let sampled_l2 = |cells: &[GridCell], schedule: &ControlSchedule| -> f64 {
        let m = 14;
        let mut acc = 0.0;
        let mut count = 0;
        for c in cells {
            for i in 0..m {
                for j in 0..m {
                    let x = vec![
                        c.lo[0] + (c.hi[0] - c.lo[0]) * (i as f64 + 0.5) / m as f64,
                        c.lo[1] + (c.hi[1] - c.lo[1]) * (j as f64 + 0.5) / m as f64,
                    ];
                    let pt = PhasePoint::resting(x, 2);
                    let end = flow_endpoint(schedule, &pt, Method::Rk4, 8.0).unwrap();
                    acc += end
                        .x
                        .iter()
                        .zip(&c.value)
                        .map(|(g, w)| (g - w) * (g - w))
                        .sum::<f64>();
                    count += 1;
                }
            }
        }
        (acc / count as f64).sqrt()
    };
    let f_norm = {
        let vals: Vec<f64> = coarse.iter().flat_map(|c| c.value.iter().copied()).collect();
        (vals.iter().map(|v| v * v).sum::<f64>() / coarse.len() as f64).sqrt()
    };

    let (_, probe) = approximate_function(&coarse, 4000.0).unwrap();
    let (coarse_schedule, coarse_report) = approximate_function(&coarse, probe.t_min).unwrap();
    let coarse_l2 = sampled_l2(&coarse, &coarse_schedule);

    let (_, fine_probe) = approximate_function(&fine, 4000.0).unwrap();
    let (fine_schedule, _) = approximate_function(&fine, fine_probe.t_min).unwrap();
    let fine_l2 = sampled_l2(&fine, &fine_schedule);

    let refusal = approximate_function(&coarse, 0.5 * coarse_report.t_min).unwrap_err();
    let refused = refusal.to_string().contains("minimum feasible horizon");

    let elapsed = start.elapsed().as_secs_f64();
    let pass = coarse_l2 <= 0.1 * f_norm && fine_l2 < coarse_l2 && refused;
    report(
        5,
        pass,
        format!(
            "sampled L2 {coarse_l2:.4} vs budget {:.4}, refined {fine_l2:.4}, \
             short horizon refused {refused}, {elapsed:.1}s",
            0.1 * f_norm
        ),
    );
}

/// Smallest |gate argument| reached anywhere in the unrolled forward passes;
/// ReLU instances whose minimum sits near 0 would make one-sided finite
/// differences straddle the kink.
fn min_gate_margin(
    params: &TrainableParams,
    grid: &TrainGrid,
    activation: Activation,
    starts: &[Vec<f64>],
) -> f64 {
    let mut margin = f64::INFINITY;
    for x0 in starts {
        let hist = forward_sample(params, grid, activation, x0).unwrap();
        for (k, layer) in params.layers.iter().enumerate() {
            match layer {
                LayerParams::Perceptron { a, b, .. } => {
                    let s: f64 =
                        a.iter().zip(&hist.x[k]).map(|(ai, xi)| ai * xi).sum::<f64>() + b;
                    margin = margin.min(s.abs());
                }
                LayerParams::Memory { a, c, b1, d_gate, f, .. } => {
                    let s = a * hist.x[k][0]
                        + c.iter().zip(&hist.aux[k]).map(|(ci, pi)| ci * pi).sum::<f64>()
                        + b1;
                    let q = d_gate * hist.x[k][0] + f;
                    margin = margin.min(s.abs()).min(q.abs());
                }
            }
        }
    }
    margin
}

fn random_instance(
    rng: &mut ChaCha8Rng,
    arch: Architecture,
    d: usize,
    n_layers: usize,
) -> TrainableParams {
    let mut val = |r: &mut ChaCha8Rng| r.gen_range(-0.5..0.5);
    match arch {
        Architecture::Memory => TrainableParams {
            arch,
            d: 1,
            d_p: 2,
            layers: (0..n_layers)
                .map(|_| LayerParams::Memory {
                    w: val(rng),
                    a: val(rng),
                    c: vec![val(rng), val(rng)],
                    b1: val(rng),
                    b2: val(rng),
                    u: vec![val(rng), val(rng)],
                    d_gate: val(rng),
                    f: val(rng),
                })
                .collect(),
            readout: None,
        },
        _ => TrainableParams {
            arch,
            d,
            d_p: if arch == Architecture::Momentum { d } else { 0 },
            layers: (0..n_layers)
                .map(|_| LayerParams::Perceptron {
                    w: (0..d).map(|_| val(rng)).collect(),
                    a: (0..d).map(|_| val(rng)).collect(),
                    b: val(rng),
                })
                .collect(),
            readout: Some(Readout {
                p: (0..d).map(|_| val(rng)).collect(),
                c0: val(rng),
            }),
        },
    }
}

#[test]
fn criterion_6_reverse_mode_agrees_with_finite_differences() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut worst = 0.0_f64;
    let mut checked = 0usize;
    for arch in [Architecture::FirstOrder, Architecture::Momentum, Architecture::Memory] {
        for case in 0..50 {
            let activation = if case % 2 == 0 { Activation::Sigmoid } else { Activation::Relu };
            let d = if arch == Architecture::Memory { 1 } else { 1 + case % 3 };
            let n_layers = 2 + case % 3;
            // Kink-adjacent draws are excluded by redrawing: a ReLU gate
            // argument within 1e-3 of zero could flip inside the
            // finite-difference stencil.
            let (params, grid, kind_data) = loop {
                let params = random_instance(&mut rng, arch, d, n_layers);
                if arch == Architecture::Memory {
                    let grid = TrainGrid::tracking(n_layers, 1.0, 0.5).unwrap();
                    let sources = vec![0.3, 0.8];
                    let m = grid.track_times().len();
                    let curves = vec![vec![0.1; m], vec![-0.2; m]];
                    let starts: Vec<Vec<f64>> = sources.iter().map(|&s| vec![s]).collect();
                    if activation == Activation::Sigmoid
                        || min_gate_margin(&params, &grid, activation, &starts) > 1e-3
                    {
                        break (params, grid, Err(CurveDataset { sources, curves }));
                    }
                } else {
                    let grid = TrainGrid::endpoint(n_layers, 1.0);
                    let ds = EndpointDataset {
                        xs: vec![vec![0.4; d], vec![-0.6; d]],
                        ys: vec![1.0, 0.0],
                    };
                    if activation == Activation::Sigmoid
                        || min_gate_margin(&params, &grid, activation, &ds.xs) > 1e-3
                    {
                        break (params, grid, Ok(ds));
                    }
                }
            };
            let (endpoint_ds, curve_ds);
            let kind = match kind_data {
                Ok(ds) => {
                    endpoint_ds = ds;
                    LossKind::Endpoint(&endpoint_ds)
                }
                Err(ds) => {
                    curve_ds = ds;
                    LossKind::Tracking(&curve_ds)
                }
            };
            let beta = 1e-3;
            let (_, grad) = gradient(&params, &kind, &grid, activation, beta, 1.0).unwrap();
            let analytic = grad.as_flat();
            let flat = params.as_flat();
            let step = 1e-5;
            for i in 0..flat.len() {
                let mut plus = flat.clone();
                plus[i] += step;
                let mut minus = flat.clone();
                minus[i] -= step;
                let lp = loss(&params.from_flat(&plus).unwrap(), &kind, &grid, activation, beta, 1.0)
                    .unwrap();
                let lm =
                    loss(&params.from_flat(&minus).unwrap(), &kind, &grid, activation, beta, 1.0)
                        .unwrap();
                let fd = (lp - lm) / (2.0 * step);
                let rel = (analytic[i] - fd).abs() / 1.0_f64.max(fd.abs());
                worst = worst.max(rel);
                checked += 1;
            }
        }
    }
    let elapsed = start.elapsed().as_secs_f64();
    let pass = worst <= 1e-4 && elapsed < 30.0;
    report(
        6,
        pass,
        format!("max relative gradient error {worst:.2e} over {checked} coordinates, {elapsed:.1}s"),
    );
}

#[test]
fn criterion_7_disk_classification_orders_architectures() {
    let start = Instant::now();
    let config = DiskConfig::default();
    let momentum = run_disk_experiment(Architecture::Momentum, &config).unwrap();
    let first = run_disk_experiment(Architecture::FirstOrder, &config).unwrap();
    let elapsed = start.elapsed().as_secs_f64();
    let ordering = momentum.l1_error < first.l1_error;
    let topology = momentum.topology == BoundaryTopology::ClosedInInterior
        && first.topology == BoundaryTopology::TouchesBorder;
    let pass = ordering && topology && elapsed < 600.0;
    report(
        7,
        pass,
        format!(
            "momentum L1 {:.4} ({:?}) vs first-order L1 {:.4} ({:?}), best seeds {}/{}, {elapsed:.1}s",
            momentum.l1_error,
            momentum.topology,
            first.l1_error,
            first.topology,
            momentum.best_seed,
            first.best_seed
        ),
    );
}

/// Brute-force topology oracle: flood-fill the components of each class and
/// test which classes own a component on the border ring.
fn oracle_topology(binary: &[bool], rows: usize, cols: usize) -> BoundaryTopology {
    if binary.iter().all(|&b| b) || binary.iter().all(|&b| !b) {
        return BoundaryTopology::Degenerate;
    }
    let mut hot_on_ring = false;
    let mut cold_on_ring = false;
    for r in 0..rows {
        for c in 0..cols {
            if r == 0 || c == 0 || r == rows - 1 || c == cols - 1 {
                if binary[r * cols + c] {
                    hot_on_ring = true;
                } else {
                    cold_on_ring = true;
                }
            }
        }
    }
    if hot_on_ring && cold_on_ring {
        BoundaryTopology::TouchesBorder
    } else {
        BoundaryTopology::ClosedInInterior
    }
}

#[test]
fn criterion_9_invariant_suites_hold() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut detail = Vec::new();

    // Free momentum flow conserves x + p coordinate-wise: d(x+p)/dt = p - p.
    let mut drift = 0.0_f64;
    for _ in 0..100 {
        let d = 1 + rng.gen_range(0..3usize);
        let spec = ModelSpec::momentum(d, Activation::Relu);
        let mut free = ControlSchedule::new(spec, 0.0, 10.0);
        free.push(
            10.0,
            ControlValues::Momentum { w: vec![0.0; d], a: vec![0.0; d], b: 0.0 },
        );
        let x0: Vec<f64> = (0..d).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let p0: Vec<f64> = (0..d).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let traj = integrate_euler(&free, &PhasePoint::new(x0.clone(), p0.clone()), 1000.0)
            .unwrap();
        for pt in &traj.points {
            for j in 0..d {
                drift = drift.max((pt.x[j] + pt.p[j] - x0[j] - p0[j]).abs());
            }
        }
    }
    let conserved = drift <= 1e-6;
    detail.push(format!("x+p drift {drift:.2e}"));

    // A ReLU gate pointed away from a half-space freezes it exactly.
    let mut freeze_err = 0.0_f64;
    let spec2 = ModelSpec::first_order(2, Activation::Relu);
    let mut gated = ControlSchedule::new(spec2.clone(), 0.0, 4.0);
    gated.push(
        4.0,
        ControlValues::FirstOrder { w: vec![1.3, -0.8], a: vec![1.0, 0.0], b: -0.5 },
    );
    for _ in 0..50 {
        let x0 = vec![rng.gen_range(-2.0..0.45), rng.gen_range(-2.0..2.0)];
        let end = integrate_rk4(&gated, &PhasePoint::state_only(x0.clone()), 200.0).unwrap();
        let end = end.endpoint();
        freeze_err = freeze_err
            .max((end.x[0] - x0[0]).abs())
            .max((end.x[1] - x0[1]).abs());
    }
    let moving = integrate_rk4(&gated, &PhasePoint::state_only(vec![1.0, 0.0]), 200.0).unwrap();
    let frozen = freeze_err <= 1e-9 && (moving.endpoint().x[0] - 1.0).abs() > 0.1;
    detail.push(format!("frozen half-space drift {freeze_err:.2e}"));

    // Appending a phase whose gates are dead on the reached region changes
    // no endpoint: sequential control phases do not interfere.
    let mut interfere = 0.0_f64;
    let starts: Vec<Vec<f64>> = (0..20)
        .map(|_| vec![rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)])
        .collect();
    let mut one_phase = ControlSchedule::new(spec2.clone(), 0.0, 2.0);
    one_phase.push(
        2.0,
        ControlValues::FirstOrder { w: vec![0.6, 0.4], a: vec![0.3, -0.7], b: 0.8 },
    );
    let mut reach = 0.0_f64;
    let mut firsts = Vec::new();
    for x0 in &starts {
        let end = integrate_rk4(&one_phase, &PhasePoint::state_only(x0.clone()), 200.0).unwrap();
        let end = end.endpoint().clone();
        reach = reach.max(end.x[0].abs()).max(end.x[1].abs());
        firsts.push(end);
    }
    let mut two_phase = ControlSchedule::new(spec2, 0.0, 4.0);
    two_phase.push(
        2.0,
        ControlValues::FirstOrder { w: vec![0.6, 0.4], a: vec![0.3, -0.7], b: 0.8 },
    );
    two_phase.push(
        2.0,
        ControlValues::FirstOrder {
            w: vec![5.0, 5.0],
            a: vec![1.0, 0.0],
            b: -(reach + 1.0),
        },
    );
    for (x0, first) in starts.iter().zip(&firsts) {
        let end = integrate_rk4(&two_phase, &PhasePoint::state_only(x0.clone()), 200.0).unwrap();
        let end = end.endpoint();
        interfere = interfere
            .max((end.x[0] - first.x[0]).abs())
            .max((end.x[1] - first.x[1]).abs());
    }
    let non_interfering = interfere <= 1e-9;
    detail.push(format!("phase interference {interfere:.2e}"));

    // Probe vs brute force on every 3x3 binary grid.
    let mut topo_mismatches = 0;
    for bits in 0..512u16 {
        let grid: Vec<bool> = (0..9).map(|i| bits >> i & 1 == 1).collect();
        let probe = boundary_topology_probe(&grid, 3, 3).unwrap();
        if probe != oracle_topology(&grid, 3, 3) {
            topo_mismatches += 1;
        }
    }
    let topo_exact = topo_mismatches == 0;
    detail.push(format!("{topo_mismatches} probe mismatches on 512 grids"));

    let elapsed = start.elapsed().as_secs_f64();
    detail.push(format!("{elapsed:.1}s"));
    let pass = conserved && frozen && non_interfering && topo_exact && elapsed < 60.0;
    report(9, pass, detail.join(", "));
}

#[test]
fn criterion_8_memory_tracking_hits_the_error_budget() {
    let start = Instant::now();
    let config = TrackingConfig::default();
    let rep = run_tracking_experiment(&config).unwrap();
    let elapsed = start.elapsed().as_secs_f64();
    let pass = rep.training_error <= 0.15 && rep.generalization_error <= 0.25 && elapsed < 600.0;
    report(
        8,
        pass,
        format!(
            "training sup {:.5} (budget 0.15), held-out mean {:.5} (budget 0.25), best seed {}, {elapsed:.1}s",
            rep.training_error, rep.generalization_error, rep.best_seed
        ),
    );
}

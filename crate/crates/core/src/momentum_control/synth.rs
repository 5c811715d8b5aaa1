//! Window planner: after staging, each point gets one exclusive time window.
//! The first half of the window steers the point's first coordinate onto a
//! free dive-coast that lands exactly on its target at the final time with a
//! distinct residual velocity; the second half pins every remaining
//! coordinate onto its target with zero velocity. Half-space gates make each
//! window's controls act on its point alone, with margins verified in closed
//! form.

use crate::dynamics::closed_form::{propagate_forced, solve_two_segment_forcing};
use crate::dynamics::types::{
    Activation, ControlSchedule, ControlSegment, ControlValues, ModelSpec, MovingOffset,
    PhasePoint,
};
use crate::error::{CoreError, Result};

use super::prep::{prepare_dataset, Geometry, PrepOutcome};
use super::problem::{ControlProblem, SynthesisTrace, CONTROL_MAGNITUDE_CAP};

/// Complete synthesis output: the playable schedule, diagnostics, the staged
/// states, and the window segments grouped by the coordinate they steer.
#[derive(Debug, Clone)]
pub struct MomentumPlan {
    pub schedule: ControlSchedule,
    pub trace: SynthesisTrace,
    pub staging: PrepOutcome,
    /// Window segments that steer first coordinates onto their dive-coasts.
    pub first_component_segments: Vec<ControlSegment>,
    /// Window segments that pin coordinates 2..d onto their targets.
    pub remaining_segments: Vec<ControlSegment>,
    /// Point indices in window order: window k steers processing_order[k],
    /// occupying schedule segments [staging + 4k, staging + 4k + 4).
    pub processing_order: Vec<usize>,
}

fn cap_check(value: f64, context: &str) -> Result<()> {
    if !value.is_finite() || value.abs() > CONTROL_MAGNITUDE_CAP {
        return Err(CoreError::MagnitudeCap {
            value: value.abs(),
            cap: CONTROL_MAGNITUDE_CAP,
            context: context.to_string(),
        });
    }
    Ok(())
}

/// Defensive replay of a two-segment forcing solve through the closed form.
fn check_two_segment(
    x0: f64,
    p0: f64,
    q1: f64,
    q2: f64,
    s: f64,
    x_want: f64,
    p_want: f64,
    context: &str,
) -> Result<()> {
    let (x1, p1) = propagate_forced(x0, p0, q1, s);
    let (x2, p2) = propagate_forced(x1, p1, q2, s);
    let scale = 1.0_f64.max(x_want.abs()).max(p_want.abs());
    if (x2 - x_want).abs() > 1e-7 * scale || (p2 - p_want).abs() > 1e-7 * scale {
        return Err(CoreError::InvalidSpec(format!(
            "internal: {context} solve replay missed its endpoint by \
             ({:.3e}, {:.3e})",
            x2 - x_want,
            p2 - p_want
        )));
    }
    Ok(())
}

struct Window {
    /// Original index of the point this window steers.
    point: usize,
    /// Start of the dive-coast (end of the first-coordinate half).
    te: f64,
    t_end: f64,
    theta: f64,
    /// Conserved sum x^(1) + p^(1) on the coast, equal to target + theta.
    c_sum: f64,
    a_segs: [(f64, ControlValues); 2],
    b_segs: [(f64, ControlValues); 2],
}

/// Plans the full schedule for a momentum batch-steering problem.
pub fn plan(problem: &ControlProblem) -> Result<MomentumPlan> {
    problem.validate()?;
    let geo = Geometry::default();
    let d = problem.d;
    let n = problem.n_points();
    let t0 = problem.t0;
    let t_final = problem.t_final;
    let span = t_final - t0;

    let s_prep = 0.01 * span;
    let staging = prepare_dataset(problem, s_prep, &geo)?;
    let prep_time = staging.segments.len() as f64 * s_prep;
    let tail = (0.25 * span).min(1.0);
    let win = (span - prep_time - tail) / n as f64;
    let s_q = win / 4.0;
    if s_q <= 1e-9 * span.max(1.0) {
        return Err(CoreError::InvalidSpec(format!(
            "horizon of length {span} is too short to schedule {n} windows"
        )));
    }

    // Process points down the staircase so every unprocessed point sits
    // strictly above the active plane during first-coordinate windows.
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| {
        staging.states[j][1]
            .partial_cmp(&staging.states[i][1])
            .unwrap()
    });

    let y1: Vec<f64> = problem.targets.iter().map(|y| y[0]).collect();
    let spread_y1 = y1.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
        - y1.iter().cloned().fold(f64::INFINITY, f64::min);
    // Separation budget two coasting points need so the later one's moving
    // plane keeps the earlier one excluded by geo.s.
    let p_sep = spread_y1 + geo.m + geo.s;

    let mut windows: Vec<Window> = Vec::with_capacity(n);
    let mut prev_theta = 0.0_f64;
    let mut max_c = f64::NEG_INFINITY;
    let mut phase_log = staging.log.clone();

    for (k, &i) in order.iter().enumerate() {
        let w_start = t0 + prep_time + k as f64 * win;
        let te = w_start + 2.0 * s_q;
        let t_end = w_start + win;
        let level = staging.states[i][1];
        let park = staging.states[i][0];

        // Dive-depth ladder: deep enough that every earlier coast stays
        // excluded from this point's moving plane, and that the conserved
        // sums x^(1) + p^(1) stay pairwise separated.
        let delta = p_sep / (t_final - t_end).exp_m1();
        let mut theta = geo.theta_floor;
        if k > 0 {
            theta = theta.max(prev_theta + delta);
            theta = theta.max(max_c + geo.gap_c - y1[i]);
        }
        prev_theta = theta;
        let c_sum = y1[i] + theta;
        max_c = max_c.max(c_sum);
        let p_e = theta * (t_final - te).exp();
        let x_e = c_sum - p_e;

        // First-coordinate half: two segments on the static plane that only
        // this point (gate value geo.m) occupies.
        let (q1, q2) = solve_two_segment_forcing(park, 0.0, x_e, p_e, s_q, s_q);
        check_two_segment(park, 0.0, q1, q2, s_q, x_e, p_e, "first-coordinate")?;
        let mut a_plane = vec![0.0; d];
        a_plane[1] = 1.0;
        let b_a = geo.m - level;
        let mut a_segs_vals = Vec::with_capacity(2);
        for q in [q1, q2] {
            let mut w = vec![0.0; d];
            w[0] = q / geo.m;
            cap_check(w[0], &format!("first-coordinate weight, point {i}"))?;
            cap_check(b_a, &format!("first-coordinate plane offset, point {i}"))?;
            a_segs_vals.push(ControlValues::Momentum {
                w,
                a: a_plane.clone(),
                b: b_a,
            });
        }

        // Remaining-coordinate half: two segments on a plane that follows
        // this point's own coasting first coordinate, pinning coordinates
        // 2..d onto their targets with zero velocity.
        let mut qs = vec![(0.0, 0.0); d];
        for j in 1..d {
            let from = staging.states[i][j];
            let to = problem.targets[i][j];
            let (qa, qb) = solve_two_segment_forcing(from, 0.0, to, 0.0, s_q, s_q);
            check_two_segment(from, 0.0, qa, qb, s_q, to, 0.0, "remaining-coordinate")?;
            qs[j] = (qa, qb);
        }
        let mut b_plane = vec![0.0; d];
        b_plane[0] = -1.0;
        let mut b_segs_vals = Vec::with_capacity(2);
        for half in 0..2 {
            let mut w = vec![0.0; d];
            for j in 1..d {
                let q = if half == 0 { qs[j].0 } else { qs[j].1 };
                w[j] = q / geo.m;
                cap_check(w[j], &format!("remaining-coordinate weight, point {i}"))?;
            }
            b_segs_vals.push(ControlValues::Momentum {
                w,
                a: b_plane.clone(),
                b: geo.m,
            });
        }

        phase_log.push(format!(
            "window {k}: point {i}, staircase level {level:.4}, theta {theta:.5}, \
             exit velocity {p_e:.4e}, dive depth {x_e:.4e}"
        ));

        windows.push(Window {
            point: i,
            te,
            t_end,
            theta,
            c_sum,
            a_segs: [
                (s_q, a_segs_vals.remove(0)),
                (s_q, a_segs_vals.remove(0)),
            ],
            b_segs: [
                (s_q, b_segs_vals.remove(0)),
                (s_q, b_segs_vals.remove(0)),
            ],
        });
    }

    // Closed-form margin audit: every inactive point must sit at gate value
    // <= -geo.s on every window's plane.
    let mut min_margin = f64::INFINITY;
    for (k, wnd) in windows.iter().enumerate() {
        let i = wnd.point;
        let level_i = staging.states[i][1];
        for (k2, wnd2) in windows.iter().enumerate() {
            let j = wnd2.point;
            if j == i {
                continue;
            }
            // First-coordinate half: plane reads the static second
            // coordinate, which is the target once processed and the
            // staircase level before.
            let x2_j = if k2 < k {
                problem.targets[j][1]
            } else {
                staging.states[j][1]
            };
            // The gate is x2_j - level_i + geo.m; margin is its negation.
            min_margin = min_margin.min(level_i - x2_j - geo.m);
            // Remaining-coordinate half: the moving plane follows point i's
            // coast; sample the window since both coasts evolve.
            for step in 0..=4 {
                let t = wnd.te + (wnd.t_end - wnd.te) * step as f64 / 4.0;
                let x1_i = y1[i] - wnd.theta * (t_final - t).exp_m1();
                let x1_j = if k2 < k {
                    y1[j] - wnd2.theta * (t_final - t).exp_m1()
                } else {
                    staging.states[j][0]
                };
                min_margin = min_margin.min(x1_j - x1_i - geo.m);
            }
        }
    }
    if n >= 2 && min_margin < geo.s - 1e-9 {
        return Err(CoreError::InfeasibleProblem {
            reason: format!(
                "internal: exclusion margin {min_margin:.6} fell below the budget {}",
                geo.s
            ),
        });
    }
    phase_log.push(format!(
        "exclusion margins verified: minimum gate distance {min_margin:.4}"
    ));

    // Assemble the schedule.
    let model = ModelSpec::momentum(d, Activation::Relu);
    let mut schedule = ControlSchedule::new(model.clone(), t0, t_final);
    schedule.tracked_points = problem
        .points
        .iter()
        .map(|x| PhasePoint::resting(x.clone(), d))
        .collect();
    for (dur, cv) in &staging.segments {
        schedule.push(*dur, cv.clone());
    }
    let mut first_component_segments = Vec::with_capacity(2 * n);
    let mut remaining_segments = Vec::with_capacity(2 * n);
    for wnd in &windows {
        for (dur, cv) in &wnd.a_segs {
            schedule.push(*dur, cv.clone());
            first_component_segments.push(schedule.segments.last().unwrap().clone());
        }
        for (dur, cv) in &wnd.b_segs {
            schedule.push_with_offset(
                *dur,
                cv.clone(),
                MovingOffset::TrackPoint {
                    point: wnd.point,
                    coord: 0,
                },
            );
            remaining_segments.push(schedule.segments.last().unwrap().clone());
        }
    }
    let tail_dur = t_final - schedule.end_time();
    schedule.push(tail_dur, ControlValues::zero(&model));
    phase_log.push(format!("free tail of length {tail_dur:.4}"));
    schedule.validate()?;

    // Budget audit: staging is at most 6 segments, each window is 4, plus
    // one tail, which stays within 8 per point from two points on.
    let budget = if n >= 2 { 8 * n } else { 12 };
    if schedule.switch_count() > budget {
        return Err(CoreError::InvalidSpec(format!(
            "internal: {} segments exceeds the budget of {budget}",
            schedule.switch_count()
        )));
    }

    let mut conserved_sum_gap = None;
    if n >= 2 {
        let mut gap = f64::INFINITY;
        for a in 0..windows.len() {
            for b in (a + 1)..windows.len() {
                gap = gap.min((windows[a].c_sum - windows[b].c_sum).abs());
            }
        }
        conserved_sum_gap = Some(gap);
    }

    let max_control_magnitude = schedule
        .segments
        .iter()
        .map(|s| s.params.max_abs())
        .fold(0.0_f64, f64::max);

    let mut predicted_endpoints = vec![PhasePoint::new(Vec::new(), Vec::new()); n];
    for wnd in &windows {
        let mut p = vec![0.0; d];
        p[0] = wnd.theta;
        predicted_endpoints[wnd.point] = PhasePoint::new(problem.targets[wnd.point].clone(), p);
    }

    let trace = SynthesisTrace {
        phase_log,
        predicted_endpoints,
        min_exclusion_margin: if n >= 2 { min_margin } else { f64::INFINITY },
        max_control_magnitude,
        conserved_sum_gap,
        switch_count: schedule.switch_count(),
    };

    Ok(MomentumPlan {
        schedule,
        trace,
        staging,
        first_component_segments,
        remaining_segments,
        processing_order: order,
    })
}

/// Synthesizes a piecewise-constant schedule steering every point to its
/// target simultaneously, landing exactly at the final time.
pub fn synthesize(problem: &ControlProblem) -> Result<(ControlSchedule, SynthesisTrace)> {
    let plan = plan(problem)?;
    Ok((plan.schedule, plan.trace))
}

/// The window segments that steer first coordinates onto their dive-coasts.
pub fn control_first_component(problem: &ControlProblem) -> Result<Vec<ControlSegment>> {
    Ok(plan(problem)?.first_component_segments)
}

/// The window segments that pin coordinates 2..d onto their targets.
pub fn control_remaining_components(problem: &ControlProblem) -> Result<Vec<ControlSegment>> {
    Ok(plan(problem)?.remaining_segments)
}

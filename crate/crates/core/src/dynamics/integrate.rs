//! Fixed-step integrators over piecewise-constant schedules.
//!
//! Step grids are segment-aligned: each segment gets `ceil(duration * n_per_unit)`
//! equal steps, so control switches (and the activation kinks they carry)
//! always land on grid nodes. Schedules whose segments reference tracked
//! points are integrated jointly: the tracked trajectories extend the state
//! vector, and gate offsets read the in-flight tracked values, including at
//! Runge-Kutta stage points.

use super::field::field_flat;
use super::types::{ControlSchedule, MovingOffset, PhasePoint, Trajectory};
use crate::error::{CoreError, Result};

/// Euler grid density of the default tolerance policy (`h = 1e-3` per unit time).
pub const DEFAULT_NODES_PER_UNIT: f64 = 1000.0;

/// Refinement factor of the reference integrator relative to a given Euler grid.
pub const REFERENCE_REFINEMENT: f64 = 100.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Euler,
    Rk4,
}

/// Explicit Euler with the simultaneous state/velocity update.
pub fn integrate_euler(
    schedule: &ControlSchedule,
    start: &PhasePoint,
    n_per_unit: f64,
) -> Result<Trajectory> {
    run(schedule, start, Method::Euler, n_per_unit, true).map(|(traj, _)| traj.unwrap())
}

/// Classical fourth-order Runge-Kutta on the same segment-aligned grid.
pub fn integrate_rk4(
    schedule: &ControlSchedule,
    start: &PhasePoint,
    n_per_unit: f64,
) -> Result<Trajectory> {
    run(schedule, start, Method::Rk4, n_per_unit, true).map(|(traj, _)| traj.unwrap())
}

/// RK4 at `REFERENCE_REFINEMENT` times the given Euler grid density; the
/// oracle all cheaper integrations are judged against.
pub fn integrate_reference(
    schedule: &ControlSchedule,
    start: &PhasePoint,
    euler_n_per_unit: f64,
) -> Result<Trajectory> {
    integrate_rk4(schedule, start, euler_n_per_unit * REFERENCE_REFINEMENT)
}

/// Endpoint-only integration; skips trajectory storage so verification sweeps
/// over many points stay cheap.
pub fn flow_endpoint(
    schedule: &ControlSchedule,
    start: &PhasePoint,
    method: Method,
    n_per_unit: f64,
) -> Result<PhasePoint> {
    run(schedule, start, method, n_per_unit, false).map(|(_, end)| end)
}

/// Endpoint under the reference integrator.
pub fn reference_endpoint(
    schedule: &ControlSchedule,
    start: &PhasePoint,
    euler_n_per_unit: f64,
) -> Result<PhasePoint> {
    flow_endpoint(
        schedule,
        start,
        Method::Rk4,
        euler_n_per_unit * REFERENCE_REFINEMENT,
    )
}

/// Shared driver. The flat joint state holds the main point first, then every
/// tracked point, each as `[x | p]`.
fn run(
    schedule: &ControlSchedule,
    start: &PhasePoint,
    method: Method,
    n_per_unit: f64,
    record: bool,
) -> Result<(Option<Trajectory>, PhasePoint)> {
    schedule.validate()?;
    start.validate(&schedule.model)?;
    if !(n_per_unit.is_finite() && n_per_unit > 0.0) {
        return Err(CoreError::InvalidSpec(format!(
            "step density must be positive, got {n_per_unit}"
        )));
    }

    let spec = &schedule.model;
    let dim = spec.d + spec.d_p;
    let n_points = 1 + schedule.tracked_points.len();
    let mut y = Vec::with_capacity(dim * n_points);
    y.extend_from_slice(&start.x);
    y.extend_from_slice(&start.p);
    for tp in &schedule.tracked_points {
        y.extend_from_slice(&tp.x);
        y.extend_from_slice(&tp.p);
    }

    let mut traj = if record {
        Some(Trajectory {
            times: vec![schedule.t0],
            points: vec![start.clone()],
        })
    } else {
        None
    };

    let mut sig = Vec::new();
    let mut k1 = vec![0.0; y.len()];
    let mut k2 = vec![0.0; y.len()];
    let mut k3 = vec![0.0; y.len()];
    let mut k4 = vec![0.0; y.len()];
    let mut stage = vec![0.0; y.len()];

    for (seg_idx, seg) in schedule.segments.iter().enumerate() {
        let n_steps = (seg.duration * n_per_unit).ceil().max(1.0) as usize;
        let h = seg.duration / n_steps as f64;
        for step in 0..n_steps {
            let t = seg.t_start + step as f64 * h;
            match method {
                Method::Euler => {
                    joint_deriv(schedule, seg_idx, t, &y, &mut k1, &mut sig);
                    for (yi, ki) in y.iter_mut().zip(&k1) {
                        *yi += h * ki;
                    }
                }
                Method::Rk4 => {
                    joint_deriv(schedule, seg_idx, t, &y, &mut k1, &mut sig);
                    for i in 0..y.len() {
                        stage[i] = y[i] + 0.5 * h * k1[i];
                    }
                    joint_deriv(schedule, seg_idx, t + 0.5 * h, &stage, &mut k2, &mut sig);
                    for i in 0..y.len() {
                        stage[i] = y[i] + 0.5 * h * k2[i];
                    }
                    joint_deriv(schedule, seg_idx, t + 0.5 * h, &stage, &mut k3, &mut sig);
                    for i in 0..y.len() {
                        stage[i] = y[i] + h * k3[i];
                    }
                    joint_deriv(schedule, seg_idx, t + h, &stage, &mut k4, &mut sig);
                    for i in 0..y.len() {
                        y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
                    }
                }
            }
            if !y.iter().all(|v| v.is_finite()) {
                return Err(CoreError::NonFiniteState {
                    step: format!(
                        "t = {:.6}, segment {seg_idx}, step {step}",
                        t + h
                    ),
                });
            }
            if let Some(traj) = traj.as_mut() {
                traj.times.push(t + h);
                traj.points.push(PhasePoint {
                    x: y[..spec.d].to_vec(),
                    p: y[spec.d..dim].to_vec(),
                });
            }
        }
    }

    let end = PhasePoint {
        x: y[..spec.d].to_vec(),
        p: y[spec.d..dim].to_vec(),
    };
    Ok((traj, end))
}

/// Derivative of the joint flat state under segment `seg_idx` at time `t`.
fn joint_deriv(
    schedule: &ControlSchedule,
    seg_idx: usize,
    t: f64,
    y: &[f64],
    dy: &mut [f64],
    sig: &mut Vec<f64>,
) {
    let spec = &schedule.model;
    let dim = spec.d + spec.d_p;
    let seg = &schedule.segments[seg_idx];
    let shift = match &seg.offset {
        None => 0.0,
        Some(MovingOffset::Ramp { slope }) => slope * (t - seg.t_start),
        Some(MovingOffset::TrackPoint { point, coord }) => y[(1 + point) * dim + coord],
    };
    let n_points = y.len() / dim;
    for k in 0..n_points {
        let base = k * dim;
        field_flat(
            spec,
            &seg.params,
            shift,
            &y[base..base + dim],
            &mut dy[base..base + dim],
            sig,
        );
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::closed_form::{propagate_damped, propagate_forced};
    use crate::dynamics::types::{
        Activation, ControlSchedule, ControlValues, ModelSpec, MovingOffset,
    };
    use approx::assert_abs_diff_eq;

    fn free_momentum_schedule(t_final: f64) -> ControlSchedule {
        let spec = ModelSpec::momentum(1, Activation::Relu);
        let mut sched = ControlSchedule::new(spec.clone(), 0.0, t_final);
        sched.push(t_final, ControlValues::zero(&spec));
        sched
    }

    #[test]
    fn euler_and_rk4_match_free_closed_form() {
        let sched = free_momentum_schedule(2.0);
        let start = PhasePoint::new(vec![1.0], vec![-0.7]);
        let (xc, pc) = propagate_damped(1.0, -0.7, 2.0);

        let e = flow_endpoint(&sched, &start, Method::Euler, 2000.0).unwrap();
        assert_abs_diff_eq!(e.x[0], xc, epsilon = 1e-3);
        assert_abs_diff_eq!(e.p[0], pc, epsilon = 1e-3);

        let r = flow_endpoint(&sched, &start, Method::Rk4, 1000.0).unwrap();
        assert_abs_diff_eq!(r.x[0], xc, epsilon = 1e-12);
        assert_abs_diff_eq!(r.p[0], pc, epsilon = 1e-12);
    }

    #[test]
    fn euler_error_shrinks_first_order_in_h() {
        let sched = free_momentum_schedule(1.0);
        let start = PhasePoint::new(vec![0.0], vec![1.0]);
        let (xc, _) = propagate_damped(0.0, 1.0, 1.0);
        let err = |n: f64| {
            let e = flow_endpoint(&sched, &start, Method::Euler, n).unwrap();
            (e.x[0] - xc).abs()
        };
        let (e1, e2) = (err(200.0), err(400.0));
        let order = (e1 / e2).log2();
        assert!(order > 0.9 && order < 1.1, "observed order {order}");
    }

    #[test]
    fn ramp_offset_sweeps_gate() {
        // Constant-speed gate sweep on a first-order model: x' = sigma(b + s t)
        // with b = -1, s = 1 opens the gate at t = 1; x(2) = 1/2.
        let spec = ModelSpec::first_order(1, Activation::Relu);
        let mut sched = ControlSchedule::new(spec.clone(), 0.0, 2.0);
        sched.push_with_offset(
            2.0,
            ControlValues::FirstOrder {
                w: vec![1.0],
                a: vec![0.0],
                b: -1.0,
            },
            MovingOffset::Ramp { slope: 1.0 },
        );
        let end = flow_endpoint(&sched, &PhasePoint::state_only(vec![0.0]), Method::Rk4, 1000.0)
            .unwrap();
        assert_abs_diff_eq!(end.x[0], 0.5, epsilon = 1e-9);
    }

    #[test]
    fn tracked_point_offset_follows_moving_reference() {
        // Forcing acts on coordinate 1 only while the gate reads the tracked
        // point's coordinate 2, which no control touches: the gate shift is a
        // genuine constant and the forced coordinate follows the constant-
        // forcing closed form.
        let spec = ModelSpec::momentum(2, Activation::Relu);
        let mut sched = ControlSchedule::new(spec.clone(), 0.0, 1.0);
        // gate = <0,x> + b + x_tracked^(2) = -2 + 3 = 1, so x1'' + x1' = w1.
        sched.push_with_offset(
            1.0,
            ControlValues::Momentum {
                w: vec![2.0, 0.0],
                a: vec![0.0, 0.0],
                b: -2.0,
            },
            MovingOffset::TrackPoint { point: 0, coord: 1 },
        );
        sched
            .tracked_points
            .push(PhasePoint::new(vec![0.0, 3.0], vec![0.0, 0.0]));
        let start = PhasePoint::new(vec![0.0, 5.0], vec![0.0, 0.0]);
        let end = flow_endpoint(&sched, &start, Method::Rk4, 1000.0).unwrap();
        let (xc, pc) = propagate_forced(0.0, 0.0, 2.0, 1.0);
        assert_abs_diff_eq!(end.x[0], xc, epsilon = 1e-10);
        assert_abs_diff_eq!(end.p[0], pc, epsilon = 1e-10);
        // Untouched coordinate stays put.
        assert_abs_diff_eq!(end.x[1], 5.0, epsilon = 1e-12);
    }

    #[test]
    fn tracked_point_evolves_jointly() {
        // The tracked point starts with velocity 1 and zero controls would
        // decay it; here the control forces every active point identically,
        // and the main point's gate follows the tracked point's position.
        // Verified against the forced closed form applied to the tracked
        // point and an exp-affine forcing on the main point.
        let spec = ModelSpec::momentum(1, Activation::Relu);
        let mut sched = ControlSchedule::new(spec.clone(), 0.0, 1.5);
        // Gate for every point: x_tracked(t) + b. Tracked point starts at 5,
        // moves freely (w = 0 keeps its forcing at zero but gate > 0 shows in
        // main point's x' = ... only through w anyway).
        sched.push_with_offset(
            1.5,
            ControlValues::Momentum {
                w: vec![1.0],
                a: vec![0.0],
                b: 0.0,
            },
            MovingOffset::TrackPoint { point: 0, coord: 0 },
        );
        let tracked_start = PhasePoint::new(vec![5.0], vec![-2.0]);
        sched.tracked_points.push(tracked_start.clone());

        // Tracked point itself is forced by the same control: its gate is its
        // own position, i.e. self-coupled with w_field = 1 -> restoring -1.
        // Keep it simple: verify against a fine RK4 of the explicit 4-dim ODE.
        let start = PhasePoint::new(vec![0.0], vec![0.0]);
        let end = flow_endpoint(&sched, &start, Method::Rk4, 2000.0).unwrap();

        let mut s = [0.0, 0.0, 5.0, -2.0];
        let n = 300_000;
        let h = 1.5 / n as f64;
        let f = |s: &[f64; 4]| {
            let gate = s[2].max(0.0);
            [s[1], -s[1] + gate, s[3], -s[3] + gate]
        };
        for _ in 0..n {
            let k1 = f(&s);
            let mut s2 = s;
            for i in 0..4 {
                s2[i] += 0.5 * h * k1[i];
            }
            let k2 = f(&s2);
            let mut s3 = s;
            for i in 0..4 {
                s3[i] += 0.5 * h * k2[i];
            }
            let k3 = f(&s3);
            let mut s4 = s;
            for i in 0..4 {
                s4[i] += h * k3[i];
            }
            let k4 = f(&s4);
            for i in 0..4 {
                s[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
            }
        }
        assert_abs_diff_eq!(end.x[0], s[0], epsilon = 1e-10);
        assert_abs_diff_eq!(end.p[0], s[1], epsilon = 1e-10);
    }

    #[test]
    fn divergent_schedule_reports_non_finite_step() {
        // Strong positive self-coupling on a first-order model: x' = w x with
        // huge w overflows quickly.
        let spec = ModelSpec::first_order(1, Activation::Relu);
        let mut sched = ControlSchedule::new(spec.clone(), 0.0, 10.0);
        sched.push(
            10.0,
            ControlValues::FirstOrder {
                w: vec![1e308],
                a: vec![1e308],
                b: 1.0,
            },
        );
        let res = flow_endpoint(&sched, &PhasePoint::state_only(vec![1.0]), Method::Euler, 100.0);
        match res {
            Err(CoreError::NonFiniteState { step }) => {
                assert!(step.contains("segment 0"), "step context: {step}");
            }
            other => panic!("expected NonFiniteState, got {other:?}"),
        }
    }

    #[test]
    fn trajectory_grid_is_segment_aligned() {
        let spec = ModelSpec::momentum(1, Activation::Relu);
        let mut sched = ControlSchedule::new(spec.clone(), 0.0, 1.0);
        sched.push(0.3, ControlValues::zero(&spec));
        sched.push(0.7, ControlValues::zero(&spec));
        let traj = integrate_euler(&sched, &PhasePoint::new(vec![0.0], vec![0.0]), 10.0).unwrap();
        // Segment 1: ceil(0.3*10) = 3 steps; boundary t = 0.3 must be a node.
        assert!(traj.times.iter().any(|&t| (t - 0.3).abs() < 1e-12));
        assert_abs_diff_eq!(*traj.times.last().unwrap(), 1.0, epsilon = 1e-12);
    }
}

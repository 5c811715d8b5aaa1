//! Tracking control: follow piecewise-linear surrogates uniformly in time.
//!
//! The memory bank is split into two d-sized blocks. On each partition
//! interval the state equation reads one block through the selection matrix
//! C, so with W = I and b2 below the slopes the state moves at exactly the
//! block's value plus b2. While a block is active the other one is idle,
//! and idle blocks are reconfigured mid-interval to the values the next
//! interval needs: one moving hyperplane per point, riding that point's
//! first component at a fixed margin, gates the memory rates so the point
//! under the plane is adjusted exactly while finished points sit strictly
//! below every later plane. A warmup phase before time zero uses the
//! endpoint controller to place states and both memory blocks.

use super::simultaneous::{memory_simultaneous_control, MemoryControlProblem};
use super::surrogate::TrackingTarget;
use crate::dynamics::types::{
    Activation, ControlSchedule, ControlValues, ModelSpec, MovingOffset, PhasePoint,
};
use crate::error::{CoreError, Result};

/// Reconfiguration margins below this are degenerate: the tracked first
/// components pass too close together to thread a hyperplane between them.
const MIN_MARGIN: f64 = 1e-6;

/// Builds a schedule on [-warmup, T] whose flow from (source_i, 0) follows
/// each target's surrogate on [0, T]. Needs d_p >= 2d; memory coordinates
/// beyond 2d are left untouched.
pub fn tracking_control(targets: &[TrackingTarget], d_p: usize) -> Result<ControlSchedule> {
    let n = targets.len();
    if n == 0 {
        return Err(CoreError::InvalidSpec("no tracking targets".into()));
    }
    let d = targets[0].source.len();
    let knots = &targets[0].knots;
    let tau = targets[0].warmup;
    for tg in targets {
        if tg.source.len() != d
            || tg.knots != *knots
            || tg.slopes.iter().any(|p| p.len() != d)
            || tg.intercepts.iter().any(|b| b.len() != d)
        {
            return Err(CoreError::InvalidSpec(
                "tracking targets must share dimension and partition".into(),
            ));
        }
        if tg.warmup != tau {
            return Err(CoreError::InvalidSpec(
                "tracking targets must share one warmup horizon".into(),
            ));
        }
    }
    if !(tau.is_finite() && tau > 0.0) {
        return Err(CoreError::InvalidSpec(format!(
            "warmup horizon must be positive, got {tau}"
        )));
    }
    if d_p < 2 * d {
        return Err(CoreError::InvalidSpec(format!(
            "tracking needs a memory bank at least twice the state dimension \
             (two alternating blocks); got d_p = {d_p} for d = {d}"
        )));
    }
    let nt = targets[0].n_intervals();
    let spec = ModelSpec::memory(d, d_p, Activation::Relu);

    // Memory values per block: slopes shifted so every entry is >= 1 and
    // the rectifier is exactly linear on active blocks.
    let b2: Vec<Vec<f64>> = (0..nt)
        .map(|k| {
            (0..d)
                .map(|r| {
                    targets
                        .iter()
                        .map(|tg| tg.slopes[k][r])
                        .fold(f64::INFINITY, f64::min)
                        - 1.0
                })
                .collect()
        })
        .collect();
    let mem_target = |i: usize, k: usize, r: usize| targets[i].slopes[k][r] - b2[k][r];

    // Warmup: place states on the first intercepts and load both blocks
    // (the second gets the second interval's values, or harmless ones).
    let initials: Vec<PhasePoint> = targets
        .iter()
        .map(|tg| PhasePoint::new(tg.source.clone(), vec![0.0; d_p]))
        .collect();
    let warm_targets: Vec<PhasePoint> = (0..n)
        .map(|i| {
            let mut p = vec![0.0; d_p];
            for r in 0..d {
                p[r] = mem_target(i, 0, r);
                p[d + r] = if nt > 1 { mem_target(i, 1, r) } else { 1.0 };
            }
            PhasePoint::new(targets[i].intercepts[0].clone(), p)
        })
        .collect();
    let warm_problem = MemoryControlProblem::new(d, d_p, initials, warm_targets.clone(), tau)?;
    let warm = memory_simultaneous_control(&warm_problem)?;

    let mut schedule = ControlSchedule::new(spec.clone(), -tau, *knots.last().unwrap());
    for seg in &warm.segments {
        schedule.push(seg.duration, seg.params.clone());
    }

    // Exact memory bookkeeping from here on; states follow the surrogate
    // lines themselves.
    let mut mem: Vec<Vec<f64>> = warm_targets.iter().map(|pt| pt.p.clone()).collect();

    for k in 0..nt {
        let (t_k, t_k1) = (knots[k], knots[k + 1]);
        let len = t_k1 - t_k;
        let base = base_controls(&spec, k, &b2[k]);
        // The last interval needs no successor; the first already has both
        // blocks loaded by the warmup.
        if k == 0 || k + 1 == nt {
            schedule.push(len, base);
            continue;
        }

        // First components are exact lines on this interval; find a
        // crossing-free window where their order is constant.
        let lines: Vec<(f64, f64)> = targets
            .iter()
            .map(|tg| (tg.intercepts[k][0], tg.slopes[k][0]))
            .collect();
        let mut crossings: Vec<f64> = Vec::new();
        for i in 0..n {
            for j in (i + 1)..n {
                let (bi, pi) = lines[i];
                let (bj, pj) = lines[j];
                if pi == pj {
                    if bi == bj {
                        return Err(CoreError::InfeasibleProblem {
                            reason: format!(
                                "targets {i} and {j} have identical first components \
                                 on interval {k}; no hyperplane can separate them"
                            ),
                        });
                    }
                    continue;
                }
                let s = (bj - bi) / (pi - pj);
                if s > 0.0 && s < len {
                    crossings.push(s);
                }
            }
        }
        let (win_lo, win_hi) = if crossings.is_empty() {
            (len / 3.0, 2.0 * len / 3.0)
        } else {
            crossings.sort_by(f64::total_cmp);
            let mut best = (0.0, 0.0);
            let mut prev = 0.0;
            for &c in crossings.iter().chain(std::iter::once(&len)) {
                if c - prev > best.1 - best.0 {
                    best = (prev, c);
                }
                prev = c;
            }
            let w = best.1 - best.0;
            (best.0 + 0.25 * w, best.1 - 0.25 * w)
        };
        let at = |s: f64, i: usize| lines[i].0 + lines[i].1 * s;
        let mut margin = f64::INFINITY;
        for i in 0..n {
            for j in (i + 1)..n {
                for s in [win_lo, win_hi] {
                    margin = margin.min((at(s, i) - at(s, j)).abs());
                }
            }
        }
        let delta = (0.5 * margin).min(1.0);
        if delta < MIN_MARGIN {
            return Err(CoreError::InfeasibleProblem {
                reason: format!(
                    "reconfiguration margin {delta:.3e} on interval {k} is below \
                     {MIN_MARGIN:.0e}; refine the surrogate partition or track \
                     fewer points at once"
                ),
            });
        }

        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&i, &j| at(win_lo, i).total_cmp(&at(win_lo, j)));

        schedule.push(win_lo, base.clone());
        let tau_sub = (win_hi - win_lo) / n as f64;
        let next_block = ((k + 1) % 2) * d;
        for (pos, &i) in order.iter().enumerate() {
            let s0 = win_lo + pos as f64 * tau_sub;
            let s1 = s0 + tau_sub;
            let mut cv = base.clone();
            let ControlValues::Memory {
                ref mut u,
                ref mut d_vec,
                ref mut f,
                ..
            } = cv
            else {
                unreachable!()
            };
            d_vec[0] = 1.0;
            *f = -at(s0, i) + delta;
            let mut rates = vec![0.0; d];
            for r in 0..d {
                rates[r] = (mem_target(i, k + 1, r) - mem[i][next_block + r])
                    / (delta * tau_sub);
                u[next_block + r] = rates[r];
            }
            schedule.push_with_offset(
                tau_sub,
                cv,
                MovingOffset::Ramp {
                    slope: -lines[i].1,
                },
            );
            // Point i lands exactly; points still above the plane drift by
            // the trapezoid of their linear gate and are corrected on
            // their own sub-window.
            for r in 0..d {
                mem[i][next_block + r] = mem_target(i, k + 1, r);
            }
            for &j in &order {
                if j == i {
                    continue;
                }
                let g0 = at(s0, j) - at(s0, i) + delta;
                let g1 = at(s1, j) - at(s1, i) + delta;
                debug_assert!(
                    g0 * g1 > 0.0,
                    "gate sign flip inside a reconfiguration sub-window"
                );
                if g0 > 0.0 {
                    let area = 0.5 * (g0 + g1) * tau_sub;
                    for r in 0..d {
                        mem[j][next_block + r] += rates[r] * area;
                    }
                }
            }
        }
        schedule.push(len - win_hi, base);
    }
    schedule.validate()?;
    Ok(schedule)
}

/// Interval-k base controls: identity W, block-selecting C, slope shift b2,
/// no memory motion.
fn base_controls(spec: &ModelSpec, k: usize, b2: &[f64]) -> ControlValues {
    let (d, d_p) = (spec.d, spec.d_p);
    let mut w = vec![0.0; d * d];
    for r in 0..d {
        w[r * d + r] = 1.0;
    }
    let mut c = vec![0.0; d * d_p];
    let block = (k % 2) * d;
    for r in 0..d {
        c[r * d_p + block + r] = 1.0;
    }
    ControlValues::Memory {
        w,
        a: vec![0.0; d * d],
        c,
        b1: vec![0.0; d],
        b2: b2.to_vec(),
        u: vec![0.0; d_p],
        d_vec: vec![0.0; d],
        f: 0.0,
    }
}

/// Oracle measurement used by tests and experiments: sup over the curve's
/// time range of the Euclidean distance between the integrated state and
/// the sampled curve.
pub fn tracked_sup_error(
    schedule: &ControlSchedule,
    target: &TrackingTarget,
    n_per_unit: f64,
) -> Result<f64> {
    let d_p = schedule.model.d_p;
    let start = PhasePoint::new(target.source.clone(), vec![0.0; d_p]);
    let traj = crate::dynamics::integrate::integrate_rk4(schedule, &start, n_per_unit)?;
    let mut sup = 0.0_f64;
    for (t, pt) in traj.times.iter().zip(&traj.points) {
        if *t < target.curve.t_start() - 1e-12 || *t > target.curve.t_end() + 1e-12 {
            continue;
        }
        let want = target.curve.eval(*t);
        let err = pt
            .x
            .iter()
            .zip(&want)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        sup = sup.max(err);
    }
    Ok(sup)
}

//! Dataset staging: drives every point (zero velocity preserved) into the
//! geometry the window planner needs, using pairs of constant-control
//! segments ("shift-stop" moves) whose second half exactly cancels the
//! velocity the first half created.
//!
//! A shift-stop move through a hyperplane with constant per-point gate values
//! `g_i > 0` and weight `omega` on one coordinate shifts that coordinate by
//! `omega * g_i * F(s)` with `F(s) = B(s)(A(s) + B(s))` and returns every
//! velocity to exactly zero: the second segment's weight is `-E(s)` times the
//! first, a point-independent ratio, so the cancellation holds for the whole
//! batch simultaneously.

use crate::dynamics::closed_form::{coef_a, coef_b, coef_e};
use crate::dynamics::types::ControlValues;
use crate::error::{CoreError, Result};

use super::problem::{ControlProblem, CONTROL_MAGNITUDE_CAP};

/// Position shift per unit `omega * gate` of a shift-stop move with segment
/// duration `s`.
pub fn shift_factor(s: f64) -> f64 {
    coef_b(s) * (coef_a(s) + coef_b(s))
}

/// The two segments of a shift-stop move: plane `<a_vec, x> + b`, weight
/// `omega` on `coord`.
pub fn shift_stop(
    d: usize,
    a_vec: &[f64],
    b: f64,
    coord: usize,
    omega: f64,
    s: f64,
) -> [(f64, ControlValues); 2] {
    let mut w1 = vec![0.0; d];
    w1[coord] = omega;
    let mut w2 = vec![0.0; d];
    w2[coord] = -omega * coef_e(s);
    [
        (
            s,
            ControlValues::Momentum {
                w: w1,
                a: a_vec.to_vec(),
                b,
            },
        ),
        (
            s,
            ControlValues::Momentum {
                w: w2,
                a: a_vec.to_vec(),
                b,
            },
        ),
    ]
}

/// Smallest `omega >= omega_min` with `|base_ij + omega * resp_ij| >= gap_ij`
/// for every constraint triple. Zero-response constraints must already hold;
/// otherwise the two points cannot be separated by this move at all.
pub(crate) fn choose_omega(
    omega_min: f64,
    constraints: &[(f64, f64, f64)],
    context: &str,
) -> Result<f64> {
    let mut intervals: Vec<(f64, f64)> = Vec::new();
    for &(base, resp, gap) in constraints {
        if resp == 0.0 {
            if base.abs() < gap {
                return Err(CoreError::InfeasibleProblem {
                    reason: format!(
                        "{context}: a point pair has identical response to the staging \
                         move and current gap {:.3e} below the required {gap:.3e}",
                        base.abs()
                    ),
                });
            }
            continue;
        }
        let lo = (-gap - base) / resp;
        let hi = (gap - base) / resp;
        let (lo, hi) = if lo <= hi { (lo, hi) } else { (hi, lo) };
        if hi > omega_min {
            intervals.push((lo, hi));
        }
    }
    intervals.sort_by(|x, y| x.partial_cmp(y).unwrap());
    let mut omega = omega_min;
    for (lo, hi) in intervals {
        if omega > lo && omega < hi {
            omega = hi;
        }
    }
    // Nudge off interval boundaries, then re-check against rounding.
    let mut omega = omega * (1.0 + 1e-9) + 1e-300;
    for _ in 0..100 {
        let ok = constraints
            .iter()
            .all(|&(base, resp, gap)| (base + omega * resp).abs() >= gap * (1.0 - 1e-9));
        if ok {
            return Ok(omega);
        }
        omega = omega * 1.000001 + 1e-300;
    }
    Err(CoreError::InfeasibleProblem {
        reason: format!("{context}: no feasible staging weight found"),
    })
}

/// Result of staging: the segments to prepend, the exact staged states
/// (velocities are exactly zero), and a log of the committed constants.
#[derive(Debug, Clone)]
pub struct PrepOutcome {
    pub segments: Vec<(f64, ControlValues)>,
    pub states: Vec<Vec<f64>>,
    pub log: Vec<String>,
}

/// Margins the staged configuration guarantees; shared with the window
/// planner so exclusion reasoning and staging targets agree.
#[derive(Debug, Clone, Copy)]
pub struct Geometry {
    /// Gate value held by the active point inside its window.
    pub m: f64,
    /// Extra clearance demanded beyond mere sign correctness.
    pub s: f64,
    /// Minimum pairwise gap of the second-coordinate staircase.
    pub g_min: f64,
    /// Required gap between conserved first-coordinate sums.
    pub gap_c: f64,
    /// Smallest dive-coast depth parameter.
    pub theta_floor: f64,
}

impl Default for Geometry {
    fn default() -> Self {
        Geometry {
            m: 0.5,
            s: 0.25,
            g_min: 1.0,
            gap_c: 0.5,
            theta_floor: 0.05,
        }
    }
}

fn max_abs_all(states: &[Vec<f64>]) -> f64 {
    states
        .iter()
        .flat_map(|v| v.iter())
        .fold(0.0_f64, |m, v| m.max(v.abs()))
}

fn min_pair_gap(states: &[Vec<f64>], coord: usize) -> f64 {
    let mut gap = f64::INFINITY;
    for i in 0..states.len() {
        for j in (i + 1)..states.len() {
            gap = gap.min((states[i][coord] - states[j][coord]).abs());
        }
    }
    gap
}

fn cap_check(value: f64, context: &str) -> Result<()> {
    if value.abs() > CONTROL_MAGNITUDE_CAP {
        return Err(CoreError::MagnitudeCap {
            value: value.abs(),
            cap: CONTROL_MAGNITUDE_CAP,
            context: context.to_string(),
        });
    }
    Ok(())
}

/// Stages the dataset for window processing. Postconditions (exact in the
/// staged states, approximate only up to integration error when replayed):
///
/// 1. every first coordinate exceeds every first-coordinate target by at
///    least `C = 1 + max |target|`, and the first coordinates are pairwise
///    distinct ("parked above the landing zone");
/// 2. the second coordinates form a staircase with pairwise gaps at least
///    `g_min`, lying at least 2 above every second-coordinate target;
/// 3. every velocity is exactly zero after each move.
///
/// Moves that are already satisfied are skipped, so the segment count is 0,
/// 2, 4, or 6.
pub fn prepare_dataset(
    problem: &ControlProblem,
    seg_duration: f64,
    geo: &Geometry,
) -> Result<PrepOutcome> {
    problem.validate()?;
    let d = problem.d;
    let n = problem.n_points();
    let mut states = problem.points.clone();
    let mut segments = Vec::new();
    let mut log = Vec::new();

    let f = shift_factor(seg_duration);
    if f <= 0.0 || !f.is_finite() {
        return Err(CoreError::InvalidSpec(format!(
            "staging segment duration {seg_duration} yields no usable shift response"
        )));
    }
    let scale = problem.scale();
    let gamma0 = 1e-3 * scale;
    let gamma1 = 1e-3 * scale;
    let max_y_abs = problem
        .targets
        .iter()
        .flat_map(|v| v.iter())
        .fold(0.0_f64, |m, v| m.max(v.abs()));
    let c_lift = 1.0 + max_y_abs;
    let max_y1 = problem
        .targets
        .iter()
        .map(|v| v[0])
        .fold(f64::NEG_INFINITY, f64::max);
    let max_y2 = problem
        .targets
        .iter()
        .map(|v| v[1])
        .fold(f64::NEG_INFINITY, f64::max);

    // Move 1: make second coordinates pairwise distinct, shearing them by a
    // gate read over the other coordinates (static during the move).
    if n >= 2 && min_pair_gap(&states, 1) < gamma0 {
        // Each pair's response is a nonzero polynomial of degree < d in the
        // candidate base, so it kills at most d - 1 candidates; this budget
        // guarantees a surviving candidate by pigeonhole.
        let n_candidates = 8 + n * n * d;
        let mut direction: Option<Vec<f64>> = None;
        'candidates: for v in 0..n_candidates {
            let base = 1.0 / (v as f64 + 2.0);
            let mut g = vec![0.0; d];
            let mut p = base;
            for (k, gk) in g.iter_mut().enumerate() {
                if k == 1 {
                    continue;
                }
                *gk = p;
                p *= base;
            }
            // Every pair that needs separating must respond to this gate.
            for i in 0..n {
                for j in (i + 1)..n {
                    let dx2 = states[i][1] - states[j][1];
                    if dx2.abs() < gamma0 {
                        let dg: f64 = (0..d).map(|k| g[k] * (states[i][k] - states[j][k])).sum();
                        if dg == 0.0 && dx2 == 0.0 {
                            continue 'candidates;
                        }
                    }
                }
            }
            direction = Some(g);
            break;
        }
        let g_dir = direction.ok_or_else(|| CoreError::InfeasibleProblem {
            reason: "no gate direction separates the coinciding second coordinates".into(),
        })?;
        let b0 = 2.0 * (1.0 + max_abs_all(&states));
        let gates: Vec<f64> = states
            .iter()
            .map(|x| (0..d).map(|k| g_dir[k] * x[k]).sum::<f64>() + b0)
            .collect();
        let mut constraints = Vec::new();
        for i in 0..n {
            for j in (i + 1)..n {
                let dx2 = states[i][1] - states[j][1];
                let resp = f * (gates[i] - gates[j]);
                if resp == 0.0 && dx2 != 0.0 {
                    // Pair differs only in the sheared coordinate; it keeps
                    // its (possibly tiny) gap. Tolerated: later moves respond
                    // to it, at the price of larger weights.
                    continue;
                }
                constraints.push((dx2, resp, gamma0));
            }
        }
        let omega = choose_omega(0.0, &constraints, "second-coordinate disambiguation")?;
        cap_check(omega, "second-coordinate disambiguation weight")?;
        cap_check(b0, "second-coordinate disambiguation offset")?;
        for (x, g) in states.iter_mut().zip(&gates) {
            x[1] += omega * g * f;
        }
        segments.extend(shift_stop(d, &g_dir, b0, 1, omega, seg_duration));
        log.push(format!(
            "disambiguate x2: omega = {omega:.6e}, offset = {b0:.3e}, shift factor = {f:.3e}"
        ));
    } else {
        log.push("disambiguate x2: skipped (already distinct)".into());
    }

    // Move 2: park first coordinates above the landing zone, pairwise
    // distinct, by a gate on the (now static) second coordinate.
    let need_lift = states.iter().any(|x| x[0] < max_y1 + c_lift);
    let need_distinct = n >= 2 && min_pair_gap(&states, 0) < gamma1;
    if need_lift || need_distinct {
        let b_a = 2.0 * (1.0 + max_abs_all(&states));
        let gates: Vec<f64> = states.iter().map(|x| x[1] + b_a).collect();
        let mut omega_min = 0.0_f64;
        for (x, g) in states.iter().zip(&gates) {
            omega_min = omega_min.max((max_y1 + c_lift - x[0]) / (f * g));
        }
        let mut constraints = Vec::new();
        for i in 0..n {
            for j in (i + 1)..n {
                constraints.push((
                    states[i][0] - states[j][0],
                    f * (gates[i] - gates[j]),
                    gamma1,
                ));
            }
        }
        let mut a_vec = vec![0.0; d];
        a_vec[1] = 1.0;
        let omega = choose_omega(omega_min, &constraints, "first-coordinate parking")?;
        cap_check(omega, "first-coordinate parking weight")?;
        cap_check(b_a, "first-coordinate parking offset")?;
        for (x, g) in states.iter_mut().zip(&gates) {
            x[0] += omega * g * f;
        }
        segments.extend(shift_stop(d, &a_vec, b_a, 0, omega, seg_duration));
        log.push(format!("park x1: omega = {omega:.6e}, offset = {b_a:.3e}"));
    } else {
        log.push("park x1: skipped (already above landing zone and distinct)".into());
    }

    // Move 3: build the second-coordinate staircase above the landing zone,
    // gated on the (now distinct and static) first coordinate.
    let staircase_ok =
        states.iter().all(|x| x[1] >= max_y2 + 2.0) && (n < 2 || min_pair_gap(&states, 1) >= geo.g_min);
    if !staircase_ok {
        let b_b = 2.0 * (1.0 + max_abs_all(&states));
        let gates: Vec<f64> = states.iter().map(|x| x[0] + b_b).collect();
        let mut omega_min = 0.0_f64;
        for (x, g) in states.iter().zip(&gates) {
            omega_min = omega_min.max((max_y2 + 2.0 - x[1]) / (f * g));
        }
        let mut constraints = Vec::new();
        for i in 0..n {
            for j in (i + 1)..n {
                constraints.push((
                    states[i][1] - states[j][1],
                    f * (gates[i] - gates[j]),
                    geo.g_min,
                ));
            }
        }
        let mut a_vec = vec![0.0; d];
        a_vec[0] = 1.0;
        let omega = choose_omega(omega_min, &constraints, "second-coordinate staircase")?;
        cap_check(omega, "second-coordinate staircase weight")?;
        cap_check(b_b, "second-coordinate staircase offset")?;
        for (x, g) in states.iter_mut().zip(&gates) {
            x[1] += omega * g * f;
        }
        segments.extend(shift_stop(d, &a_vec, b_b, 1, omega, seg_duration));
        log.push(format!("staircase x2: omega = {omega:.6e}, offset = {b_b:.3e}"));
    } else {
        log.push("staircase x2: skipped (already above landing zone with gaps)".into());
    }

    // Postcondition audit; failures here are synthesis bugs, not bad input.
    for x in &states {
        if x[0] < max_y1 + c_lift - 1e-9 {
            return Err(CoreError::InfeasibleProblem {
                reason: "staging failed to park a first coordinate above the landing zone".into(),
            });
        }
        if x[1] < max_y2 + 2.0 - 1e-9 {
            return Err(CoreError::InfeasibleProblem {
                reason: "staging failed to lift a second coordinate above the landing zone".into(),
            });
        }
    }
    if n >= 2 {
        if min_pair_gap(&states, 0) <= 0.0 {
            return Err(CoreError::InfeasibleProblem {
                reason: "staging left two first coordinates equal".into(),
            });
        }
        if min_pair_gap(&states, 1) < geo.g_min * (1.0 - 1e-9) {
            return Err(CoreError::InfeasibleProblem {
                reason: "staging left a staircase gap below the required minimum".into(),
            });
        }
    }

    Ok(PrepOutcome {
        segments,
        states,
        log,
    })
}

//! Compressive flows: a constant control with restoring weight in (0, 1/4)
//! contracts one coordinate toward a hyperplane without oscillation, so
//! points approach from one side and never cross. The contraction of the
//! position component is exact and monotone in time, which lets the duration
//! for a requested shrink factor be computed by bisection.

use crate::dynamics::types::{
    Activation, ControlSchedule, ControlValues, ModelSpec,
};
use crate::error::{CoreError, Result};

/// Restoring weight used by default; any value in (0, 1/4) keeps the flow
/// overdamped (non-oscillatory), and this one matches the classic example of
/// an attracting regime.
pub const DEFAULT_COMPRESSION_WEIGHT: f64 = 0.2;

/// Exact factor by which a zero-velocity displacement from the hyperplane
/// contracts after time `t` under restoring weight `w` in (0, 1/4):
/// the (1,1) entry of exp(t [[0, 1], [-w, -1]]).
pub fn contraction_ratio(w: f64, t: f64) -> f64 {
    let disc = (0.25 - w).sqrt();
    let lam_p = -0.5 + disc;
    let lam_m = -0.5 - disc;
    (lam_p * (lam_m * t).exp() - lam_m * (lam_p * t).exp()) / (lam_p - lam_m)
}

/// Residual velocity per unit initial displacement: the (2,1) entry of the
/// same matrix exponential.
pub fn contraction_velocity(w: f64, t: f64) -> f64 {
    let disc = (0.25 - w).sqrt();
    let lam_p = -0.5 + disc;
    let lam_m = -0.5 - disc;
    -w * ((lam_p * t).exp() - (lam_m * t).exp()) / (lam_p - lam_m)
}

/// Smallest duration for which the contraction ratio drops to `shrink`.
/// Bracketed from the slow-eigenvalue estimate ln(1/shrink)/|lambda_+|,
/// which undershoots by a bounded prefactor.
pub fn duration_for_ratio(w: f64, shrink: f64) -> Result<f64> {
    if !(0.0 < w && w < 0.25) {
        return Err(CoreError::InvalidSpec(format!(
            "restoring weight must lie in (0, 1/4), got {w}"
        )));
    }
    if !(0.0 < shrink && shrink < 1.0) {
        return Err(CoreError::InvalidSpec(format!(
            "shrink factor must lie in (0, 1), got {shrink}"
        )));
    }
    let lam_p = -0.5 + (0.25 - w).sqrt();
    let estimate = (1.0 / shrink).ln() / lam_p.abs();
    let mut hi = estimate;
    while contraction_ratio(w, hi) > shrink {
        hi *= 2.0;
    }
    // The estimate is a lower bound whenever it failed; otherwise start at 0.
    let mut lo = if hi > estimate { estimate } else { 0.0 };
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if contraction_ratio(w, mid) > shrink {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(hi)
}

/// The constant control contracting `component` toward the plane
/// x^(component) = plane, acting only on the half-space above it. The weight
/// entry is the negated restoring coefficient: the gate contributes
/// +w_entry * (x - plane) to the acceleration, so a restoring force needs a
/// negative entry.
pub(crate) fn compression_values(
    d: usize,
    component: usize,
    plane: f64,
    w: f64,
) -> ControlValues {
    let mut wv = vec![0.0; d];
    wv[component] = -w;
    let mut a = vec![0.0; d];
    a[component] = 1.0;
    ControlValues::Momentum {
        w: wv,
        a,
        b: -plane,
    }
}

/// Single-segment schedule contracting the `component`-extent of a box in
/// the open half-space x^(component) > 0 by at least `shrink`, with every
/// point keeping x^(component) > 0 throughout.
pub fn compressive_schedule(
    d: usize,
    component: usize,
    box_lo: f64,
    box_hi: f64,
    shrink: f64,
) -> Result<ControlSchedule> {
    if component >= d {
        return Err(CoreError::InvalidSpec(format!(
            "component {component} out of range for d = {d}"
        )));
    }
    if !(box_lo <= box_hi) || !box_lo.is_finite() || !box_hi.is_finite() {
        return Err(CoreError::InvalidSpec(format!(
            "box extent [{box_lo}, {box_hi}] is not a valid interval"
        )));
    }
    if box_lo <= 0.0 {
        return Err(CoreError::InfeasibleProblem {
            reason: format!(
                "box must lie in the open half-space x^({component}) > 0, got lower edge {box_lo}"
            ),
        });
    }
    let w = DEFAULT_COMPRESSION_WEIGHT;
    let duration = duration_for_ratio(w, shrink)?;
    let model = ModelSpec::momentum(d, Activation::Relu);
    let mut schedule = ControlSchedule::new(model, 0.0, duration);
    schedule.push(duration, compression_values(d, component, 0.0, w));
    Ok(schedule)
}

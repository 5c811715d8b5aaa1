//! Piecewise-linear surrogates for sampled target curves.
//!
//! The tracking controller can follow straight lines exactly, so curves are
//! replaced by continuous piecewise-linear interpolants over a partition
//! shared by all curves. Tracking additionally needs the first-component
//! slopes to be pairwise distinct on every interval (distinct slopes keep
//! the tracked points separable by moving hyperplanes), which is enforced
//! by tilting each curve's first component with its own small linear ramp
//! when the raw slopes collide. The partition is refined by doubling until
//! the sup-norm deviation fits the requested tolerance.

use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};

/// Default warmup horizon prepended by the tracking controller.
pub const DEFAULT_WARMUP: f64 = 1.0;

const MAX_DOUBLINGS: usize = 10;

/// A curve [t_start, t_end] -> R^d given by samples on a time grid,
/// interpreted linearly between samples.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SampledCurve {
    pub times: Vec<f64>,
    pub values: Vec<Vec<f64>>,
}

impl SampledCurve {
    pub fn new(times: Vec<f64>, values: Vec<Vec<f64>>) -> Result<Self> {
        if times.len() < 2 || times.len() != values.len() {
            return Err(CoreError::InvalidSpec(format!(
                "curve needs at least two samples with matching times, got {} times and {} values",
                times.len(),
                values.len()
            )));
        }
        if times.windows(2).any(|w| !(w[1] > w[0])) || times.iter().any(|t| !t.is_finite()) {
            return Err(CoreError::InvalidSpec(
                "curve sample times must be finite and strictly increasing".into(),
            ));
        }
        let d = values[0].len();
        if d == 0 || values.iter().any(|v| v.len() != d) {
            return Err(CoreError::InvalidSpec(
                "curve samples must share one positive dimension".into(),
            ));
        }
        if values.iter().flatten().any(|v| !v.is_finite()) {
            return Err(CoreError::InvalidSpec(
                "curve samples must be finite".into(),
            ));
        }
        Ok(SampledCurve { times, values })
    }

    /// Constructs a curve by sampling a function on a uniform grid.
    pub fn from_fn(
        t_start: f64,
        t_end: f64,
        samples: usize,
        f: impl Fn(f64) -> Vec<f64>,
    ) -> Result<Self> {
        let times: Vec<f64> = (0..samples)
            .map(|s| t_start + (t_end - t_start) * s as f64 / (samples - 1) as f64)
            .collect();
        let values = times.iter().map(|&t| f(t)).collect();
        SampledCurve::new(times, values)
    }

    pub fn dim(&self) -> usize {
        self.values[0].len()
    }

    pub fn t_start(&self) -> f64 {
        self.times[0]
    }

    pub fn t_end(&self) -> f64 {
        *self.times.last().unwrap()
    }

    /// Linear interpolation between samples, clamped at the ends.
    pub fn eval(&self, t: f64) -> Vec<f64> {
        if t <= self.times[0] {
            return self.values[0].clone();
        }
        if t >= *self.times.last().unwrap() {
            return self.values.last().unwrap().clone();
        }
        let k = match self
            .times
            .binary_search_by(|probe| probe.total_cmp(&t))
        {
            Ok(k) => return self.values[k].clone(),
            Err(k) => k - 1,
        };
        let lam = (t - self.times[k]) / (self.times[k + 1] - self.times[k]);
        self.values[k]
            .iter()
            .zip(&self.values[k + 1])
            .map(|(a, b)| a + lam * (b - a))
            .collect()
    }
}

/// One curve to track: its start point, the sampled curve, and the shared
/// piecewise-linear surrogate in slope-intercept form per interval.
#[derive(Debug, Clone)]
pub struct TrackingTarget {
    pub source: Vec<f64>,
    pub curve: SampledCurve,
    /// Shared partition boundaries, `n_intervals() + 1` of them.
    pub knots: Vec<f64>,
    /// Per-interval slope vectors.
    pub slopes: Vec<Vec<f64>>,
    /// Per-interval values at the interval start; continuity means
    /// `intercepts[k + 1] = intercepts[k] + slopes[k] * dt_k`.
    pub intercepts: Vec<Vec<f64>>,
    pub warmup: f64,
}

impl TrackingTarget {
    pub fn n_intervals(&self) -> usize {
        self.slopes.len()
    }

    /// Interval index containing t (clamped to the partition).
    pub fn interval_of(&self, t: f64) -> usize {
        let n = self.n_intervals();
        if t <= self.knots[0] {
            return 0;
        }
        match self.knots.binary_search_by(|probe| probe.total_cmp(&t)) {
            Ok(k) => k.min(n - 1),
            Err(k) => (k - 1).min(n - 1),
        }
    }

    /// The surrogate value at time t.
    pub fn surrogate_eval(&self, t: f64) -> Vec<f64> {
        let k = self.interval_of(t);
        let dt = t - self.knots[k];
        self.intercepts[k]
            .iter()
            .zip(&self.slopes[k])
            .map(|(b, p)| b + p * dt)
            .collect()
    }
}

/// What the surrogate construction achieved.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SurrogateReport {
    /// Final interval count after doublings.
    pub n_t: usize,
    /// Number of partition doublings performed.
    pub doublings: usize,
    /// Sup-norm deviation between curves and surrogates over all samples.
    pub sup_error: f64,
    /// Minimal pairwise first-component slope gap over all intervals
    /// (infinite for a single curve).
    pub slope_gap: f64,
}

/// Builds continuous piecewise-linear surrogates on a shared uniform
/// partition of `n_t` intervals, interpolating each curve at the knots,
/// doubling the partition until the sup deviation over the curve samples
/// is at most `eps_h`, and tilting first components apart when their
/// slopes collide on some interval.
pub fn build_surrogate(
    curves: &[SampledCurve],
    sources: &[Vec<f64>],
    n_t: usize,
    eps_h: f64,
) -> Result<(Vec<TrackingTarget>, SurrogateReport)> {
    if curves.is_empty() || curves.len() != sources.len() {
        return Err(CoreError::InvalidSpec(format!(
            "need matching nonempty curve and source lists, got {} and {}",
            curves.len(),
            sources.len()
        )));
    }
    let d = curves[0].dim();
    let (t0, t1) = (curves[0].t_start(), curves[0].t_end());
    for c in curves {
        if c.dim() != d || c.t_start() != t0 || c.t_end() != t1 {
            return Err(CoreError::InvalidSpec(
                "curves must share one dimension and one time domain".into(),
            ));
        }
    }
    if sources.iter().any(|s| s.len() != d) {
        return Err(CoreError::InvalidSpec(
            "sources must match the curve dimension".into(),
        ));
    }
    if n_t == 0 || !(eps_h.is_finite() && eps_h > 0.0) {
        return Err(CoreError::InvalidSpec(
            "need at least one interval and a positive tolerance".into(),
        ));
    }

    let span = t1 - t0;
    let mut achieved = f64::INFINITY;
    for doublings in 0..=MAX_DOUBLINGS {
        let n = n_t << doublings;
        let knots: Vec<f64> = (0..=n).map(|k| t0 + span * k as f64 / n as f64).collect();

        // Interpolate every curve at the knots.
        let mut slopes: Vec<Vec<Vec<f64>>> = Vec::with_capacity(curves.len());
        let mut intercepts: Vec<Vec<Vec<f64>>> = Vec::with_capacity(curves.len());
        for curve in curves {
            let at: Vec<Vec<f64>> = knots.iter().map(|&t| curve.eval(t)).collect();
            let mut ps = Vec::with_capacity(n);
            for k in 0..n {
                let dt = knots[k + 1] - knots[k];
                ps.push(
                    at[k]
                        .iter()
                        .zip(&at[k + 1])
                        .map(|(a, b)| (b - a) / dt)
                        .collect::<Vec<f64>>(),
                );
            }
            intercepts.push(at[..n].to_vec());
            slopes.push(ps);
        }

        let interp_err = sup_deviation(curves, &knots, &slopes, &intercepts);
        if interp_err > eps_h {
            achieved = achieved.min(interp_err);
            continue;
        }

        // Tilt first components apart where slopes collide. Curve i gains
        // slope gamma_i = i * step everywhere, so pair (i, j) gaps change
        // by (i - j) * step; the scan halves the step until every gap
        // clears half of it. The tilt is anchored at the domain start, so
        // its value cost is at most (count - 1) * step * span.
        let m = curves.len();
        let slope_budget = (eps_h - interp_err).max(0.0) / (2.0 * m as f64 * span.max(1e-12));
        let want = slope_budget.min(1e-3);
        let raw_gap = min_slope_gap(&slopes, 0.0);
        let mut tilt = 0.0;
        let mut slope_gap = raw_gap;
        if m > 1 && raw_gap < want && want > 0.0 {
            let mut step = want;
            let mut found = false;
            for _ in 0..60 {
                let g = min_slope_gap(&slopes, step);
                if g >= 0.5 * step {
                    tilt = step;
                    slope_gap = g;
                    found = true;
                    break;
                }
                step *= 0.5;
            }
            if !found {
                return Err(CoreError::InfeasibleProblem {
                    reason: "could not separate first-component surrogate slopes; \
                             curves are too close to identical"
                        .into(),
                });
            }
        }
        if tilt > 0.0 {
            for (i, (ps, bs)) in slopes.iter_mut().zip(intercepts.iter_mut()).enumerate() {
                let gamma = i as f64 * tilt;
                for (k, (p, b)) in ps.iter_mut().zip(bs.iter_mut()).enumerate() {
                    p[0] += gamma;
                    b[0] += gamma * (knots[k] - t0);
                }
            }
        }

        let total_err = if tilt > 0.0 {
            sup_deviation(curves, &knots, &slopes, &intercepts)
        } else {
            interp_err
        };
        achieved = achieved.min(total_err);
        if total_err <= eps_h {
            let targets = sources
                .iter()
                .zip(curves)
                .zip(slopes.into_iter().zip(intercepts))
                .map(|((source, curve), (ps, bs))| TrackingTarget {
                    source: source.clone(),
                    curve: curve.clone(),
                    knots: knots.clone(),
                    slopes: ps,
                    intercepts: bs,
                    warmup: DEFAULT_WARMUP,
                })
                .collect();
            let report = SurrogateReport {
                n_t: n,
                doublings,
                sup_error: total_err,
                slope_gap,
            };
            return Ok((targets, report));
        }
    }
    Err(CoreError::ToleranceUnmet {
        achieved,
        tolerance: eps_h,
        context: "piecewise-linear surrogate within the partition doubling budget".into(),
    })
}

/// Sup over curves, their sample times, and components of the deviation
/// between samples and the surrogate.
fn sup_deviation(
    curves: &[SampledCurve],
    knots: &[f64],
    slopes: &[Vec<Vec<f64>>],
    intercepts: &[Vec<Vec<f64>>],
) -> f64 {
    let n = knots.len() - 1;
    let mut sup = 0.0_f64;
    for ((curve, ps), bs) in curves.iter().zip(slopes).zip(intercepts) {
        for (t, v) in curve.times.iter().zip(&curve.values) {
            let k = match knots.binary_search_by(|probe| probe.total_cmp(t)) {
                Ok(k) => k.min(n - 1),
                Err(k) => (k - 1).min(n - 1),
            };
            let dt = t - knots[k];
            for ((b, p), truth) in bs[k].iter().zip(&ps[k]).zip(v) {
                sup = sup.max((b + p * dt - truth).abs());
            }
        }
    }
    sup
}

/// Minimal pairwise gap of first-component slopes over intervals after
/// tilting curve i by `i * step`.
fn min_slope_gap(slopes: &[Vec<Vec<f64>>], step: f64) -> f64 {
    let m = slopes.len();
    if m < 2 {
        return f64::INFINITY;
    }
    let n = slopes[0].len();
    let mut gap = f64::INFINITY;
    for k in 0..n {
        for i in 0..m {
            for j in (i + 1)..m {
                let si = slopes[i][k][0] + i as f64 * step;
                let sj = slopes[j][k][0] + j as f64 * step;
                gap = gap.min((si - sj).abs());
            }
        }
    }
    gap
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear_curve_is_reproduced_exactly() {
        let curve =
            SampledCurve::from_fn(0.0, 1.0, 11, |t| vec![2.0 * t + 1.0]).unwrap();
        let (targets, report) = build_surrogate(&[curve], &[vec![0.0]], 1, 0.5).unwrap();
        assert_eq!(report.n_t, 1);
        assert!(report.sup_error <= 1e-12);
        assert!((targets[0].slopes[0][0] - 2.0).abs() <= 1e-12);
        assert!((targets[0].intercepts[0][0] - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn sine_meets_the_interpolation_bound() {
        // 257 samples put every knot of a 16-interval partition on a
        // sample, so the classical h^2/8 interpolation bound applies.
        let two_pi = std::f64::consts::TAU;
        let curve = SampledCurve::from_fn(0.0, two_pi, 257, |t| vec![t.sin()]).unwrap();
        let bound = (two_pi / 16.0).powi(2) / 8.0;
        let (_, report) = build_surrogate(&[curve], &[vec![0.0]], 16, bound).unwrap();
        assert_eq!(report.doublings, 0);
        assert!(
            report.sup_error <= bound,
            "sup {} above the interpolation bound {}",
            report.sup_error,
            bound
        );
    }

    #[test]
    fn equal_slopes_are_tilted_apart() {
        let a = SampledCurve::from_fn(0.0, 1.0, 21, |t| vec![t]).unwrap();
        let b = SampledCurve::from_fn(0.0, 1.0, 21, |t| vec![t + 0.5]).unwrap();
        let (targets, report) =
            build_surrogate(&[a, b], &[vec![0.0], vec![0.1]], 2, 0.1).unwrap();
        assert!(report.slope_gap > 0.0);
        for k in 0..2 {
            let gap = (targets[0].slopes[k][0] - targets[1].slopes[k][0]).abs();
            assert!(
                gap >= report.slope_gap - 1e-15,
                "interval {k} slope gap {gap} below reported {}",
                report.slope_gap
            );
        }
        assert!(report.sup_error <= 0.1);
    }

    #[test]
    fn partition_doubles_until_the_tolerance_is_met() {
        let two_pi = std::f64::consts::TAU;
        let curve = SampledCurve::from_fn(0.0, two_pi, 513, |t| vec![t.sin()]).unwrap();
        let (targets, report) = build_surrogate(&[curve], &[vec![0.0]], 1, 0.02).unwrap();
        assert!(report.doublings > 0);
        assert_eq!(report.n_t, 1 << report.doublings);
        assert!(report.sup_error <= 0.02);
        assert_eq!(targets[0].n_intervals(), report.n_t);
    }

    #[test]
    fn unreachable_tolerance_reports_the_achieved_error() {
        let two_pi = std::f64::consts::TAU;
        let curve = SampledCurve::from_fn(0.0, two_pi, 300, |t| vec![t.sin()]).unwrap();
        let err = build_surrogate(&[curve], &[vec![0.0]], 1, 1e-13).unwrap_err();
        match err {
            CoreError::ToleranceUnmet {
                achieved,
                tolerance,
                ..
            } => {
                assert!(achieved > tolerance);
                assert!(achieved < 1e-2);
            }
            other => panic!("expected a tolerance error, got {other}"),
        }
    }

    #[test]
    fn surrogate_evaluation_is_continuous_at_knots() {
        let curve = SampledCurve::from_fn(0.0, 2.0, 41, |t| vec![t * t, 1.0 - t]).unwrap();
        let (targets, _) = build_surrogate(&[curve], &[vec![0.0, 0.0]], 4, 0.5).unwrap();
        let tg = &targets[0];
        for k in 1..tg.knots.len() - 1 {
            let t = tg.knots[k];
            let left = {
                let dt = t - tg.knots[k - 1];
                tg.intercepts[k - 1]
                    .iter()
                    .zip(&tg.slopes[k - 1])
                    .map(|(b, p)| b + p * dt)
                    .collect::<Vec<f64>>()
            };
            let right = tg.surrogate_eval(t);
            for (l, r) in left.iter().zip(&right) {
                assert!((l - r).abs() <= 1e-12, "jump at knot {k}");
            }
        }
    }
}

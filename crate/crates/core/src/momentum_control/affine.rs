//! Exact per-coordinate affine bookkeeping for compression pipelines.
//!
//! Every compression-phase segment acts on each coordinate pair
//! (x^(i), p^(i)) as an affine map: a gated self-coupled oscillator for the
//! active coordinate and free damped motion for the others. Composing these
//! 2x2 maps tracks any point of a region exactly, with no integration error,
//! which is what lets representatives and cluster radii be planned in closed
//! form.

use crate::dynamics::closed_form::{coef_b, coef_e, propagate_self_coupled};

/// Affine map z -> m z + c on one (position, velocity) pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct PairMap {
    pub m: [[f64; 2]; 2],
    pub c: [f64; 2],
}

impl PairMap {
    pub fn identity() -> Self {
        PairMap {
            m: [[1.0, 0.0], [0.0, 1.0]],
            c: [0.0, 0.0],
        }
    }

    /// Free damped motion: x' = x + B(t) p, p' = E(t) p.
    pub fn free(t: f64) -> Self {
        PairMap {
            m: [[1.0, coef_b(t)], [0.0, coef_e(t)]],
            c: [0.0, 0.0],
        }
    }

    /// Flow of the self-coupled pair with restoring coefficient `w` about
    /// `plane` for time `t`: the acceleration is -p - w (x - plane).
    /// Negative `w` yields the expanding (saddle) regime.
    pub fn self_coupled(w: f64, plane: f64, t: f64) -> Self {
        // Columns from the closed form: displacements (1, 0) and (0, 1).
        let (x1, p1) = propagate_self_coupled(plane + 1.0, 0.0, w, plane, t);
        let (x2, p2) = propagate_self_coupled(plane, 1.0, w, plane, t);
        let m = [[x1 - plane, x2 - plane], [p1, p2]];
        PairMap {
            m,
            c: [
                plane - m[0][0] * plane,
                -m[1][0] * plane,
            ],
        }
    }

    /// self ∘ before.
    pub fn compose(&self, before: &PairMap) -> Self {
        let a = &self.m;
        let b = &before.m;
        PairMap {
            m: [
                [
                    a[0][0] * b[0][0] + a[0][1] * b[1][0],
                    a[0][0] * b[0][1] + a[0][1] * b[1][1],
                ],
                [
                    a[1][0] * b[0][0] + a[1][1] * b[1][0],
                    a[1][0] * b[0][1] + a[1][1] * b[1][1],
                ],
            ],
            c: [
                a[0][0] * before.c[0] + a[0][1] * before.c[1] + self.c[0],
                a[1][0] * before.c[0] + a[1][1] * before.c[1] + self.c[1],
            ],
        }
    }

    pub fn apply(&self, x: f64, p: f64) -> (f64, f64) {
        (
            self.m[0][0] * x + self.m[0][1] * p + self.c[0],
            self.m[1][0] * x + self.m[1][1] * p + self.c[1],
        )
    }

    /// Sensitivity of the final position to the initial position.
    pub fn slope(&self) -> f64 {
        self.m[0][0]
    }
}

/// Smallest duration for which the composed map `coast(tc) . op(t) . base`
/// reaches the requested position slope, where op is the self-coupled flow
/// with restoring coefficient `w` about `plane`. The slope is monotone in t
/// in both regimes (contracting for w in (0, 1/4), expanding for w < 0), so
/// bisection applies.
pub(crate) fn duration_for_slope(
    base: &PairMap,
    w: f64,
    plane: f64,
    coast: f64,
    target_slope: f64,
) -> Option<f64> {
    let composed_slope = |t: f64| -> f64 {
        PairMap::free(coast)
            .compose(&PairMap::self_coupled(w, plane, t).compose(base))
            .slope()
    };
    let start = composed_slope(0.0);
    let contracting = w > 0.0;
    if contracting && target_slope >= start {
        return if target_slope == start { Some(0.0) } else { None };
    }
    if !contracting && target_slope <= start {
        return if target_slope == start { Some(0.0) } else { None };
    }
    let mut hi = 1.0;
    let hits = |t: f64| {
        let s = composed_slope(t);
        if contracting {
            s <= target_slope
        } else {
            s >= target_slope
        }
    };
    let mut guard = 0;
    while !hits(hi) {
        hi *= 2.0;
        guard += 1;
        if guard > 200 {
            return None;
        }
    }
    let mut lo = 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if hits(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Some(hi)
}

//! Exact propagators for one damped scalar degree of freedom
//!
//! ```text
//!   x' = p,    p' = -p + q(t)
//! ```
//!
//! under the forcing shapes that occur in control synthesis: `q = 0`,
//! `q` constant, `q` affine in `e^{-t}`, and the self-coupled case
//! `q = -w (x - x_eq)` where the forcing reads back the position. Every
//! synthesis routine in the crate plans with these maps and is verified
//! afterwards against the generic integrators, so their accuracy is
//! load-bearing: small-argument branches below keep relative error near
//! machine precision for all durations down to [`super::types::MIN_SEGMENT_DURATION`].

/// `A(s) = s - 1 + e^{-s}`, the position response to a unit constant forcing.
///
/// Series `s^2/2 - s^3/6 + ...` is used for small `s` where the direct
/// expression loses all significant digits.
pub fn coef_a(s: f64) -> f64 {
    if s.abs() < 1e-3 {
        // Alternating series, terms decay by factor < 1e-3/6: four terms
        // reach full double precision.
        let s2 = s * s;
        s2 / 2.0 - s2 * s / 6.0 + s2 * s2 / 24.0 - s2 * s2 * s / 120.0
    } else {
        s - 1.0 + (-s).exp()
    }
}

/// `B(s) = 1 - e^{-s}`, the velocity response to a unit constant forcing.
pub fn coef_b(s: f64) -> f64 {
    -(-s).exp_m1()
}

/// `E(s) = e^{-s}`, the free velocity decay factor.
pub fn coef_e(s: f64) -> f64 {
    (-s).exp()
}

/// Free motion: returns `(x(t), p(t))` for `q = 0`.
///
/// `x + p` is conserved exactly in real arithmetic; tests pin the floating
/// point drift of this invariant.
pub fn propagate_damped(x0: f64, p0: f64, t: f64) -> (f64, f64) {
    (x0 + coef_b(t) * p0, coef_e(t) * p0)
}

/// Constant forcing `q`: returns `(x(t), p(t))`.
pub fn propagate_forced(x0: f64, p0: f64, q: f64, t: f64) -> (f64, f64) {
    let (xf, pf) = propagate_damped(x0, p0, t);
    (xf + q * coef_a(t), pf + q * coef_b(t))
}

/// Forcing `q(t) = q0 + qe * e^{-t}` (time measured from the segment start):
/// returns `(x(t), p(t))`. This shape arises when a gate reads a coordinate
/// that itself decays freely.
pub fn propagate_exp_affine(x0: f64, p0: f64, q0: f64, qe: f64, t: f64) -> (f64, f64) {
    let e = coef_e(t);
    let b = coef_b(t);
    // 1 - e^{-t}(1+t) = t^2/2 - t^3/3 + ... ; series below 1e-3 for accuracy.
    let g = if t.abs() < 1e-3 {
        let t2 = t * t;
        t2 / 2.0 - t2 * t / 3.0 + t2 * t2 / 8.0 - t2 * t2 * t / 30.0
    } else {
        1.0 - e * (1.0 + t)
    };
    let p = e * p0 + q0 * b + qe * t * e;
    let x = x0 + p0 * b + q0 * coef_a(t) + qe * g;
    (x, p)
}

/// Self-coupled motion `x'' + x' + w (x - x_eq) = 0`: returns `(x(t), p(t))`.
///
/// `w` here is the restoring coefficient of the shifted oscillator; a field
/// weight `w_field` acting through an active gate on the same coordinate
/// corresponds to `w = -w_field`. Three branches on the discriminant
/// `1/4 - w`: real splitting (cosh/sinh), critical, and oscillatory.
pub fn propagate_self_coupled(x0: f64, p0: f64, w: f64, x_eq: f64, t: f64) -> (f64, f64) {
    let z0 = x0 - x_eq;
    let disc = 0.25 - w;
    let half = (-0.5 * t).exp();
    let drive = p0 + 0.5 * z0;
    let (z, dz) = if disc.abs() < 1e-12 {
        let z = half * (z0 + drive * t);
        (z, -0.5 * z + half * drive)
    } else if disc > 0.0 {
        let mu = disc.sqrt();
        let (sh, ch) = ((mu * t).sinh(), (mu * t).cosh());
        // sinh(mu t)/mu stays finite as mu -> 0.
        let shm = if mu > 1e-8 { sh / mu } else { t * (1.0 + (mu * t) * (mu * t) / 6.0) };
        let z = half * (z0 * ch + drive * shm);
        (z, -0.5 * z + half * (z0 * mu * sh + drive * ch))
    } else {
        let mu = (-disc).sqrt();
        let (sn, cs) = (mu * t).sin_cos();
        let z = half * (z0 * cs + drive * sn / mu);
        (z, -0.5 * z + half * (-z0 * mu * sn + drive * cs))
    };
    (z + x_eq, dz)
}

/// Solves for the two constant forcings `(q1, q2)` on consecutive windows of
/// durations `s1`, `s2` that steer `(x0, p0)` exactly to `(x_end, p_end)`.
///
/// The 2x2 system couples the position response of window 1 carried through
/// window 2 with the direct responses of window 2. Its determinant
/// `(A1 + B2 B1) B2 - A2 E2 B1` is strictly positive for positive durations
/// (equal-duration case: `B^2 (A + B)`), so the solve never degenerates.
pub fn solve_two_segment_forcing(
    x0: f64,
    p0: f64,
    x_end: f64,
    p_end: f64,
    s1: f64,
    s2: f64,
) -> (f64, f64) {
    let (a1, b1) = (coef_a(s1), coef_b(s1));
    let (a2, b2, e2) = (coef_a(s2), coef_b(s2), coef_e(s2));
    let m11 = a1 + b2 * b1;
    let m12 = a2;
    let m21 = e2 * b1;
    let m22 = b2;
    let det = m11 * m22 - m12 * m21;
    debug_assert!(det > 0.0, "two-segment response matrix is always nonsingular");
    // Free evolution over both windows.
    let (x1f, p1f) = propagate_damped(x0, p0, s1);
    let (x2f, p2f) = propagate_damped(x1f, p1f, s2);
    let rx = x_end - x2f;
    let rp = p_end - p2f;
    let q1 = (rx * m22 - m12 * rp) / det;
    let q2 = (m11 * rp - rx * m21) / det;
    (q1, q2)
}

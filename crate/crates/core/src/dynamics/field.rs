//! Right-hand sides of the three controlled flows.
//!
//! All three gates accept an additive scalar `gate_shift` that the integrator
//! resolves per time step from a segment's [`super::types::MovingOffset`]; a
//! zero shift reproduces the plain piecewise-constant field.

use super::types::{Architecture, ControlValues, ModelSpec, PhasePoint};

/// Evaluates one architecture's field on a flat state slice `y = [x | p]`
/// into `dy`. `sig` is scratch for the componentwise activations of the
/// memory architecture (resized as needed, no allocation in steady state).
pub(crate) fn field_flat(
    spec: &ModelSpec,
    params: &ControlValues,
    gate_shift: f64,
    y: &[f64],
    dy: &mut [f64],
    sig: &mut Vec<f64>,
) {
    let d = spec.d;
    let act = spec.activation;
    match params {
        ControlValues::FirstOrder { w, a, b } => {
            let z = dot(a, &y[..d]) + b + gate_shift;
            let s = act.value(z);
            for i in 0..d {
                dy[i] = w[i] * s;
            }
        }
        ControlValues::Momentum { w, a, b } => {
            let z = dot(a, &y[..d]) + b + gate_shift;
            let s = act.value(z);
            let inv_eps = 1.0 / spec.epsilon;
            let (x, p) = y.split_at(d);
            let _ = x;
            for i in 0..d {
                dy[i] = p[i];
                dy[d + i] = (-p[i] + w[i] * s) * inv_eps;
            }
        }
        ControlValues::Memory {
            w,
            a,
            c,
            b1,
            b2,
            u,
            d_vec,
            f,
        } => {
            let d_p = spec.d_p;
            let (x, p) = y.split_at(d);
            sig.resize(d, 0.0);
            for i in 0..d {
                let mut z = b1[i];
                z += dot(&a[i * d..(i + 1) * d], x);
                z += dot(&c[i * d_p..(i + 1) * d_p], p);
                sig[i] = act.value(z);
            }
            for i in 0..d {
                let mut v = b2[i];
                for j in 0..d {
                    v += w[i * d + j] * sig[j];
                }
                dy[i] = v;
            }
            let gate = act.value(dot(d_vec, x) + f + gate_shift);
            for k in 0..d_p {
                dy[d + k] = u[k] * gate;
            }
        }
    }
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Convenience wrapper evaluating the field at one phase point.
pub fn vector_field(
    spec: &ModelSpec,
    params: &ControlValues,
    gate_shift: f64,
    point: &PhasePoint,
) -> PhasePoint {
    let dim = spec.d + spec.d_p;
    let mut y = Vec::with_capacity(dim);
    y.extend_from_slice(&point.x);
    y.extend_from_slice(&point.p);
    let mut dy = vec![0.0; dim];
    let mut sig = Vec::new();
    field_flat(spec, params, gate_shift, &y, &mut dy, &mut sig);
    PhasePoint {
        x: dy[..spec.d].to_vec(),
        p: dy[spec.d..].to_vec(),
    }
}

/// True when the architecture's auxiliary block is the velocity of `x`
/// (momentum), as opposed to an independent memory.
pub fn velocity_coupled(arch: Architecture) -> bool {
    matches!(arch, Architecture::Momentum)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::types::Activation;
    use approx::assert_abs_diff_eq;

    #[test]
    fn first_order_field_matches_hand_computation() {
        let spec = ModelSpec::first_order(2, Activation::Relu);
        let cv = ControlValues::FirstOrder {
            w: vec![2.0, -1.0],
            a: vec![1.0, 1.0],
            b: -0.5,
        };
        let pt = PhasePoint::state_only(vec![1.0, 0.25]);
        // gate = 1 + 0.25 - 0.5 = 0.75 > 0, sigma = 0.75.
        let f = vector_field(&spec, &cv, 0.0, &pt);
        assert_abs_diff_eq!(f.x[0], 1.5, epsilon = 1e-15);
        assert_abs_diff_eq!(f.x[1], -0.75, epsilon = 1e-15);

        // Shift closes the gate.
        let f = vector_field(&spec, &cv, -1.0, &pt);
        assert_eq!(f.x, vec![0.0, 0.0]);
    }

    #[test]
    fn momentum_field_damps_velocity() {
        let spec = ModelSpec::momentum(1, Activation::Relu);
        let cv = ControlValues::Momentum {
            w: vec![3.0],
            a: vec![1.0],
            b: 0.0,
        };
        let pt = PhasePoint::new(vec![2.0], vec![0.5]);
        let f = vector_field(&spec, &cv, 0.0, &pt);
        assert_abs_diff_eq!(f.x[0], 0.5, epsilon = 1e-15);
        // p' = -p + w sigma(x) = -0.5 + 6.
        assert_abs_diff_eq!(f.p[0], 5.5, epsilon = 1e-15);
    }

    #[test]
    fn momentum_epsilon_scales_velocity_equation() {
        let mut spec = ModelSpec::momentum(1, Activation::Relu);
        spec.epsilon = 0.5;
        let cv = ControlValues::Momentum {
            w: vec![0.0],
            a: vec![0.0],
            b: 0.0,
        };
        let pt = PhasePoint::new(vec![0.0], vec![1.0]);
        let f = vector_field(&spec, &cv, 0.0, &pt);
        assert_abs_diff_eq!(f.p[0], -2.0, epsilon = 1e-15);
    }

    #[test]
    fn memory_field_matrix_and_gate() {
        let spec = ModelSpec::memory(2, 1, Activation::Relu);
        let cv = ControlValues::Memory {
            w: vec![1.0, 0.0, 0.0, 2.0],
            a: vec![1.0, 0.0, 0.0, 1.0],
            c: vec![0.5, -0.5],
            b1: vec![0.0, 0.0],
            b2: vec![0.1, 0.2],
            u: vec![4.0],
            d_vec: vec![1.0, -1.0],
            f: 0.25,
        };
        let pt = PhasePoint::new(vec![1.0, -2.0], vec![2.0]);
        // Row activations: sigma(1 + 0.5*2) = 2, sigma(-2 - 0.5*2) = 0.
        // x' = W sigma + b2 = (2 + 0.1, 0 + 0.2).
        // p-gate: sigma(1 - (-2) + 0.25) = 3.25, p' = 4 * 3.25.
        let fld = vector_field(&spec, &cv, 0.0, &pt);
        assert_abs_diff_eq!(fld.x[0], 2.1, epsilon = 1e-15);
        assert_abs_diff_eq!(fld.x[1], 0.2, epsilon = 1e-15);
        assert_abs_diff_eq!(fld.p[0], 13.0, epsilon = 1e-15);
    }

    #[test]
    fn rank_one_memory_embedding_reproduces_scalar_field() {
        // Scalar form: x' = w sigma(<a,x> + <c,p> + b), against the matrix
        // embedding, at several states including a closed gate.
        let (d, d_p) = (3, 2);
        let spec = ModelSpec::memory(d, d_p, Activation::Relu);
        let w = [1.5, -2.0, 0.5];
        let a = [1.0, 0.5, -0.25];
        let c = [2.0, -1.0];
        let b = 0.3;
        let u = [0.7, -0.2];
        let dv = [0.0, 1.0, 0.0];
        let f = -0.4;
        let cv = ControlValues::memory_rank_one(d, d_p, &w, &a, &c, b, &u, &dv, f);
        for pt in [
            PhasePoint::new(vec![0.5, -1.0, 2.0], vec![1.0, 0.5]),
            PhasePoint::new(vec![-5.0, 0.0, 0.0], vec![0.0, 0.0]),
        ] {
            let gate = a.iter().zip(&pt.x).map(|(ai, xi)| ai * xi).sum::<f64>()
                + c.iter().zip(&pt.p).map(|(ci, pi)| ci * pi).sum::<f64>()
                + b;
            let s = gate.max(0.0);
            let fld = vector_field(&spec, &cv, 0.0, &pt);
            for i in 0..d {
                assert_abs_diff_eq!(fld.x[i], w[i] * s, epsilon = 1e-15);
            }
            let pg = (pt.x[1] + f).max(0.0);
            for k in 0..d_p {
                assert_abs_diff_eq!(fld.p[k], u[k] * pg, epsilon = 1e-15);
            }
        }
    }
}

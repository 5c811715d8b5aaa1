//! Exact propagation of constant-control memory segments whose gates read
//! only quantities the segment itself freezes. Every synthesis move in this
//! module family is built that way on purpose: the gate values are constant
//! along each trajectory, so the update is linear in time and the builder
//! can maintain the true states without numerical integration.

use crate::dynamics::types::{Activation, ControlValues, ModelSpec};

/// One point's state as the builder tracks it.
pub(crate) type State = (Vec<f64>, Vec<f64>);

/// Gate values of one memory segment at a given state: the d row gates of
/// the state equation and the scalar gate of the memory equation.
fn gates(spec: &ModelSpec, cv: &ControlValues, st: &State) -> (Vec<f64>, f64) {
    let ControlValues::Memory {
        a, c, b1, d_vec, f, ..
    } = cv
    else {
        unreachable!("memory synthesis only emits memory segments");
    };
    let (d, d_p) = (spec.d, spec.d_p);
    let rows = (0..d)
        .map(|r| {
            let mut z = b1[r];
            for j in 0..d {
                z += a[r * d + j] * st.0[j];
            }
            for j in 0..d_p {
                z += c[r * d_p + j] * st.1[j];
            }
            z
        })
        .collect();
    let g = d_vec.iter().zip(&st.0).map(|(dj, xj)| dj * xj).sum::<f64>() + f;
    (rows, g)
}

/// Advances every state through `duration` of the segment, assuming (and
/// checking) frozen gates. Panics in debug builds if a gate moved: that
/// means a synthesis move violated its own freezing contract, which is a
/// bug, not an input error.
pub(crate) fn apply(spec: &ModelSpec, cv: &ControlValues, duration: f64, states: &mut [State]) {
    let ControlValues::Memory { w, b2, u, .. } = cv else {
        unreachable!("memory synthesis only emits memory segments");
    };
    let act = Activation::Relu;
    let d = spec.d;
    for st in states.iter_mut() {
        let (rows, g) = gates(spec, cv, st);
        for r in 0..d {
            let mut v = b2[r];
            for j in 0..d {
                v += w[r * d + j] * act.value(rows[j]);
            }
            st.0[r] += duration * v;
        }
        let gv = act.value(g);
        for (pk, uk) in st.1.iter_mut().zip(u) {
            *pk += duration * uk * gv;
        }
        if cfg!(debug_assertions) {
            let (rows2, g2) = gates(spec, cv, st);
            let drift = rows
                .iter()
                .zip(&rows2)
                .map(|(x, y)| (x - y).abs())
                .fold((g - g2).abs(), f64::max);
            debug_assert!(
                drift <= 1e-9 * (1.0 + duration),
                "segment moved its own gate by {drift:.3e}; freezing contract broken"
            );
        }
    }
}

/// Scales a finished segment list into a window of the given length. Gate
/// values do not depend on the rates w and u, so halving every duration and
/// doubling those rates reproduces the same endpoint exactly.
pub(crate) fn rescale(segments: &mut [(f64, ControlValues)], window: f64) {
    let total: f64 = segments.iter().map(|(t, _)| *t).sum();
    assert!(total > 0.0, "cannot rescale an empty move list");
    let s = window / total;
    for (t, cv) in segments.iter_mut() {
        *t *= s;
        let ControlValues::Memory { w, b2, u, .. } = cv else {
            unreachable!("memory synthesis only emits memory segments");
        };
        for v in w.iter_mut().chain(b2.iter_mut()).chain(u.iter_mut()) {
            *v /= s;
        }
    }
}

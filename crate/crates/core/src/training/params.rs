//! Trainable parameter containers: one control value set per Euler layer,
//! plus an optional linear readout for classification heads.

use serde::{Deserialize, Serialize};

use crate::dynamics::types::Architecture;
use crate::error::{CoreError, Result};

/// Controls of a single layer. A perceptron layer drives both the
/// first-order flow and the forcing term of the damped second-order flow;
/// a memory layer drives the scalar-state gated flow with a writable bank.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LayerParams {
    Perceptron {
        w: Vec<f64>,
        a: Vec<f64>,
        b: f64,
    },
    Memory {
        w: f64,
        a: f64,
        c: Vec<f64>,
        b1: f64,
        b2: f64,
        u: Vec<f64>,
        d_gate: f64,
        f: f64,
    },
}

impl LayerParams {
    pub fn entry_count(&self) -> usize {
        match self {
            LayerParams::Perceptron { w, a, .. } => w.len() + a.len() + 1,
            LayerParams::Memory { c, u, .. } => c.len() + u.len() + 6,
        }
    }

    pub fn sum_squares(&self) -> f64 {
        let sq = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>();
        match self {
            LayerParams::Perceptron { w, a, b } => sq(w) + sq(a) + b * b,
            LayerParams::Memory {
                w,
                a,
                c,
                b1,
                b2,
                u,
                d_gate,
                f,
            } => {
                w * w + a * a + sq(c) + b1 * b1 + b2 * b2 + sq(u) + d_gate * d_gate + f * f
            }
        }
    }
}

/// Linear readout `<p, x(T)> + c0` applied to the state part of the final
/// layer for classification-style endpoint losses.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Readout {
    pub p: Vec<f64>,
    pub c0: f64,
}

/// Piecewise-constant controls with one segment per Euler layer.
///
/// The same container carries gradients: a gradient has the shape of the
/// parameters it differentiates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainableParams {
    pub arch: Architecture,
    pub d: usize,
    pub d_p: usize,
    pub layers: Vec<LayerParams>,
    pub readout: Option<Readout>,
}

impl TrainableParams {
    pub fn n_layers(&self) -> usize {
        self.layers.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.layers.is_empty() {
            return Err(CoreError::InvalidSpec("at least one layer required".into()));
        }
        if self.d == 0 {
            return Err(CoreError::InvalidSpec("state dimension must be >= 1".into()));
        }
        for (k, layer) in self.layers.iter().enumerate() {
            match (self.arch, layer) {
                (Architecture::FirstOrder | Architecture::Momentum, LayerParams::Perceptron { w, a, b }) => {
                    if w.len() != self.d || a.len() != self.d {
                        return Err(CoreError::ShapeMismatch {
                            context: "perceptron layer",
                            expected: self.d,
                            got: w.len().max(a.len()),
                        });
                    }
                    if !(w.iter().chain(a).all(|v| v.is_finite()) && b.is_finite()) {
                        return Err(CoreError::NonFiniteState {
                            step: format!("layer {k} parameters"),
                        });
                    }
                }
                (Architecture::Memory, LayerParams::Memory { c, u, .. }) => {
                    if self.d != 1 {
                        return Err(CoreError::InvalidSpec(
                            "trainable memory layers drive a scalar state".into(),
                        ));
                    }
                    if c.len() != self.d_p || u.len() != self.d_p {
                        return Err(CoreError::ShapeMismatch {
                            context: "memory layer",
                            expected: self.d_p,
                            got: c.len().max(u.len()),
                        });
                    }
                    if !layer_finite(layer) {
                        return Err(CoreError::NonFiniteState {
                            step: format!("layer {k} parameters"),
                        });
                    }
                }
                _ => {
                    return Err(CoreError::InvalidSpec(format!(
                        "layer {k} does not match architecture {:?}",
                        self.arch
                    )));
                }
            }
        }
        if let Some(r) = &self.readout {
            if r.p.len() != self.d {
                return Err(CoreError::ShapeMismatch {
                    context: "readout projection",
                    expected: self.d,
                    got: r.p.len(),
                });
            }
            if !(r.p.iter().all(|v| v.is_finite()) && r.c0.is_finite()) {
                return Err(CoreError::NonFiniteState {
                    step: "readout parameters".into(),
                });
            }
        }
        Ok(())
    }

    /// Gradient/optimizer companion with every entry zero.
    pub fn zeros_like(&self) -> TrainableParams {
        let mut out = self.clone();
        for layer in &mut out.layers {
            match layer {
                LayerParams::Perceptron { w, a, b } => {
                    w.iter_mut().for_each(|v| *v = 0.0);
                    a.iter_mut().for_each(|v| *v = 0.0);
                    *b = 0.0;
                }
                LayerParams::Memory {
                    w,
                    a,
                    c,
                    b1,
                    b2,
                    u,
                    d_gate,
                    f,
                } => {
                    *w = 0.0;
                    *a = 0.0;
                    c.iter_mut().for_each(|v| *v = 0.0);
                    *b1 = 0.0;
                    *b2 = 0.0;
                    u.iter_mut().for_each(|v| *v = 0.0);
                    *d_gate = 0.0;
                    *f = 0.0;
                }
            }
        }
        if let Some(r) = &mut out.readout {
            r.p.iter_mut().for_each(|v| *v = 0.0);
            r.c0 = 0.0;
        }
        out
    }

    /// All entries in a fixed order: layers first (field declaration order
    /// within each layer), then the readout. The order is the contract for
    /// [`TrainableParams::from_flat`] and the finite-difference oracle.
    pub fn as_flat(&self) -> Vec<f64> {
        let mut flat = Vec::new();
        for layer in &self.layers {
            match layer {
                LayerParams::Perceptron { w, a, b } => {
                    flat.extend_from_slice(w);
                    flat.extend_from_slice(a);
                    flat.push(*b);
                }
                LayerParams::Memory {
                    w,
                    a,
                    c,
                    b1,
                    b2,
                    u,
                    d_gate,
                    f,
                } => {
                    flat.push(*w);
                    flat.push(*a);
                    flat.extend_from_slice(c);
                    flat.push(*b1);
                    flat.push(*b2);
                    flat.extend_from_slice(u);
                    flat.push(*d_gate);
                    flat.push(*f);
                }
            }
        }
        if let Some(r) = &self.readout {
            flat.extend_from_slice(&r.p);
            flat.push(r.c0);
        }
        flat
    }

    /// Rebuilds parameters with this value's shape from a flat vector
    /// produced by [`TrainableParams::as_flat`].
    pub fn from_flat(&self, flat: &[f64]) -> Result<TrainableParams> {
        let mut out = self.clone();
        let mut it = flat.iter().copied();
        let take = |n: usize, it: &mut dyn Iterator<Item = f64>| -> Vec<f64> {
            it.take(n).collect()
        };
        for layer in &mut out.layers {
            match layer {
                LayerParams::Perceptron { w, a, b } => {
                    let nw = w.len();
                    let na = a.len();
                    *w = take(nw, &mut it);
                    *a = take(na, &mut it);
                    *b = it.next().unwrap_or(f64::NAN);
                }
                LayerParams::Memory {
                    w,
                    a,
                    c,
                    b1,
                    b2,
                    u,
                    d_gate,
                    f,
                } => {
                    *w = it.next().unwrap_or(f64::NAN);
                    *a = it.next().unwrap_or(f64::NAN);
                    let nc = c.len();
                    *c = take(nc, &mut it);
                    *b1 = it.next().unwrap_or(f64::NAN);
                    *b2 = it.next().unwrap_or(f64::NAN);
                    let nu = u.len();
                    *u = take(nu, &mut it);
                    *d_gate = it.next().unwrap_or(f64::NAN);
                    *f = it.next().unwrap_or(f64::NAN);
                }
            }
        }
        if let Some(r) = &mut out.readout {
            let np = r.p.len();
            r.p = take(np, &mut it);
            r.c0 = it.next().unwrap_or(f64::NAN);
        }
        if it.next().is_some() || out.as_flat().len() != flat.len() {
            return Err(CoreError::ShapeMismatch {
                context: "flat parameter vector",
                expected: self.as_flat().len(),
                got: flat.len(),
            });
        }
        Ok(out)
    }

    /// Squared discrete L2 norm of the controls: the horizon times the
    /// layer-mean of squared entries, plus the readout's squared entries.
    /// This is the `beta` operand of both losses; the discretization
    /// convention is stated here because the continuous norm leaves it open.
    pub fn norm_sq(&self, t_horizon: f64) -> f64 {
        let layer_mean = self
            .layers
            .iter()
            .map(LayerParams::sum_squares)
            .sum::<f64>()
            / self.layers.len() as f64;
        let readout = self
            .readout
            .as_ref()
            .map(|r| r.p.iter().map(|x| x * x).sum::<f64>() + r.c0 * r.c0)
            .unwrap_or(0.0);
        t_horizon * layer_mean + readout
    }
}

fn layer_finite(layer: &LayerParams) -> bool {
    match layer {
        LayerParams::Perceptron { w, a, b } => {
            w.iter().chain(a).all(|v| v.is_finite()) && b.is_finite()
        }
        LayerParams::Memory {
            w,
            a,
            c,
            b1,
            b2,
            u,
            d_gate,
            f,
        } => {
            [w, a, b1, b2, d_gate, f].iter().all(|v| v.is_finite())
                && c.iter().chain(u).all(|v| v.is_finite())
        }
    }
}

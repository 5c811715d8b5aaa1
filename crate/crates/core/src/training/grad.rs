//! Handwritten reverse-mode differentiation through the Euler unrolls.
//!
//! The sweep mirrors `forward_sample` exactly, layer by layer; ReLU takes
//! subgradient 0 at its kink. Per-sample passes run in parallel and the
//! reduction is sequential in sample order, so gradients are bit-stable.

use crate::dynamics::types::{Activation, Architecture};
use crate::error::Result;
use crate::par::batch_map;
use crate::training::forward::{dot, forward_sample, SampleHistory, TrainGrid};
use crate::training::loss::{
    endpoint_residual, trapezoid_weights, tracking_sample_term, LossKind,
};
use crate::training::params::{LayerParams, TrainableParams};

/// Evaluates the selected loss and its exact reverse-mode gradient.
pub fn gradient(
    params: &TrainableParams,
    kind: &LossKind,
    grid: &TrainGrid,
    activation: Activation,
    beta: f64,
    t_horizon: f64,
) -> Result<(f64, TrainableParams)> {
    params.validate()?;
    let n_flat = params.as_flat().len();
    let mut flat_grad = vec![0.0; n_flat];
    let mut data_loss = 0.0;

    match kind {
        LossKind::Endpoint(ds) => {
            ds.validate(params.d)?;
            let n = ds.xs.len() as f64;
            let per_sample: Vec<Result<(f64, Vec<f64>)>> = batch_map(
                &ds.xs.iter().zip(&ds.ys).collect::<Vec<_>>(),
                |(x0, y)| {
                    let hist = forward_sample(params, grid, activation, x0)?;
                    let r = endpoint_residual(params, &hist, **y)?;
                    let readout = params.readout.as_ref().expect("residual checked readout");
                    let mut grad = params.zeros_like();
                    let scale = 2.0 * r / n;
                    let gx: Vec<f64> = readout.p.iter().map(|p| scale * p).collect();
                    backward_sample(params, grid, activation, &hist, gx, |_, _| {}, &mut grad);
                    {
                        let g_read = grad.readout.as_mut().expect("same shape");
                        for (gp, xv) in g_read.p.iter_mut().zip(hist.final_state()) {
                            *gp += scale * xv;
                        }
                        g_read.c0 += scale;
                    }
                    Ok((r * r / n, grad.as_flat()))
                },
            );
            for item in per_sample {
                let (l, g) = item?;
                data_loss += l;
                for (acc, gi) in flat_grad.iter_mut().zip(&g) {
                    *acc += gi;
                }
            }
        }
        LossKind::Tracking(ds) => {
            ds.validate(grid)?;
            let n = ds.sources.len() as f64;
            let weights = trapezoid_weights(grid.track_times());
            let per_sample: Vec<Result<(f64, Vec<f64>)>> = batch_map(
                &ds.sources.iter().zip(&ds.curves).collect::<Vec<_>>(),
                |(src, curve)| {
                    let hist = forward_sample(params, grid, activation, &[**src])?;
                    let term = tracking_sample_term(grid, &weights, &hist, curve);
                    let mut grad = params.zeros_like();
                    let last = grid.times.len() - 1;
                    let node_dev = |k: usize| -> f64 {
                        let j = k - grid.track_start;
                        2.0 / n * weights[j] * (hist.x[k][0] - curve[j])
                    };
                    let gx = vec![node_dev(last)];
                    backward_sample(
                        params,
                        grid,
                        activation,
                        &hist,
                        gx,
                        |k, gx_node| {
                            if k >= grid.track_start {
                                gx_node[0] += node_dev(k);
                            }
                        },
                        &mut grad,
                    );
                    Ok((term / n, grad.as_flat()))
                },
            );
            for item in per_sample {
                let (l, g) = item?;
                data_loss += l;
                for (acc, gi) in flat_grad.iter_mut().zip(&g) {
                    *acc += gi;
                }
            }
        }
    }

    // Regularizer: beta * (T * mean over layers of squared entries +
    // squared readout), differentiated entry-wise.
    let flat = params.as_flat();
    let n_layers = params.layers.len() as f64;
    let layer_entries: usize = params.layers.iter().map(|l| l.entry_count()).sum();
    for (i, (g, v)) in flat_grad.iter_mut().zip(&flat).enumerate() {
        let scale = if i < layer_entries {
            beta * 2.0 * t_horizon / n_layers
        } else {
            beta * 2.0
        };
        *g += scale * v;
    }
    let grad = params.from_flat(&flat_grad)?;
    Ok((data_loss + beta * params.norm_sq(t_horizon), grad))
}

/// Backward sweep for one sample. `gx_final` seeds the state adjoint at
/// the last node; `node_seed(k, gx)` adds any direct loss dependence on
/// the state at interior node k (tracking quadrature). Parameter
/// gradients accumulate into `grad`.
fn backward_sample(
    params: &TrainableParams,
    grid: &TrainGrid,
    activation: Activation,
    hist: &SampleHistory,
    gx_final: Vec<f64>,
    node_seed: impl Fn(usize, &mut [f64]),
    grad: &mut TrainableParams,
) {
    let mut gx = gx_final;
    let mut gaux = vec![0.0; hist.aux[0].len()];

    for k in (0..params.layers.len()).rev() {
        let h = grid.times[k + 1] - grid.times[k];
        let x = &hist.x[k];
        let au = &hist.aux[k];
        match (&params.layers[k], &mut grad.layers[k]) {
            (
                LayerParams::Perceptron { w, a, b },
                LayerParams::Perceptron { w: dw, a: da, b: db },
            ) => {
                let s = dot(a, x) + b;
                let g = activation.value(s);
                let dg = activation.derivative(s);
                match params.arch {
                    Architecture::FirstOrder => {
                        let coef = h * dg * dot(w, &gx);
                        for r in 0..params.d {
                            dw[r] += h * g * gx[r];
                            da[r] += coef * x[r];
                            gx[r] += coef * a[r];
                        }
                        *db += coef;
                    }
                    Architecture::Momentum => {
                        let coef = h * dg * dot(w, &gaux);
                        for r in 0..params.d {
                            dw[r] += h * g * gaux[r];
                            da[r] += coef * x[r];
                        }
                        *db += coef;
                        for r in 0..params.d {
                            let gx_r = gx[r];
                            gx[r] += coef * a[r];
                            gaux[r] = h * gx_r + (1.0 - h) * gaux[r];
                        }
                    }
                    Architecture::Memory => unreachable!("validated layer kinds"),
                }
            }
            (
                LayerParams::Memory { w, a, c, b1, b2: _, u, d_gate, f },
                LayerParams::Memory {
                    w: dw,
                    a: da,
                    c: dc,
                    b1: db1,
                    b2: db2,
                    u: du,
                    d_gate: dd,
                    f: df,
                },
            ) => {
                let s = a * x[0] + dot(c, au) + b1;
                let q = d_gate * x[0] + f;
                let gs = activation.value(s);
                let gq = activation.value(q);
                let coef_s = h * activation.derivative(s) * w * gx[0];
                let coef_q = h * activation.derivative(q) * dot(u, &gaux);
                *dw += h * gs * gx[0];
                *da += coef_s * x[0];
                for j in 0..params.d_p {
                    dc[j] += coef_s * au[j];
                    du[j] += h * gq * gaux[j];
                }
                *db1 += coef_s;
                *db2 += h * gx[0];
                *dd += coef_q * x[0];
                *df += coef_q;
                for j in 0..params.d_p {
                    gaux[j] += coef_s * c[j];
                }
                gx[0] += coef_s * a + coef_q * d_gate;
            }
            _ => unreachable!("gradient shares the parameter shape"),
        }
        node_seed(k, &mut gx);
    }
}

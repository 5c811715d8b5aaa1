//! The two loss functionals: endpoint least squares through a linear
//! readout, and trapezoidal tracking deviation over the scored window.

use crate::dynamics::types::Activation;
use crate::error::{CoreError, Result};
use crate::par::batch_map;
use crate::training::forward::{forward_sample, dot, SampleHistory, TrainGrid};
use crate::training::params::TrainableParams;

/// Labelled endpoints: `ys[i]` is the scalar class/regression target of
/// `xs[i]`.
#[derive(Debug, Clone)]
pub struct EndpointDataset {
    pub xs: Vec<Vec<f64>>,
    pub ys: Vec<f64>,
}

impl EndpointDataset {
    pub fn validate(&self, d: usize) -> Result<()> {
        if self.xs.is_empty() || self.xs.len() != self.ys.len() {
            return Err(CoreError::InvalidSpec(
                "endpoint dataset needs matching, non-empty samples and labels".into(),
            ));
        }
        if let Some(bad) = self.xs.iter().find(|x| x.len() != d) {
            return Err(CoreError::ShapeMismatch {
                context: "endpoint sample",
                expected: d,
                got: bad.len(),
            });
        }
        Ok(())
    }
}

/// Scalar sources with one target curve each, sampled on the grid's
/// scored nodes (`grid.track_times()`).
#[derive(Debug, Clone)]
pub struct CurveDataset {
    pub sources: Vec<f64>,
    pub curves: Vec<Vec<f64>>,
}

impl CurveDataset {
    pub fn validate(&self, grid: &TrainGrid) -> Result<()> {
        if self.sources.is_empty() || self.sources.len() != self.curves.len() {
            return Err(CoreError::InvalidSpec(
                "curve dataset needs matching, non-empty sources and curves".into(),
            ));
        }
        let want = grid.track_times().len();
        if let Some(bad) = self.curves.iter().find(|c| c.len() != want) {
            return Err(CoreError::ShapeMismatch {
                context: "target curve grid",
                expected: want,
                got: bad.len(),
            });
        }
        Ok(())
    }
}

/// Which functional to evaluate/differentiate.
#[derive(Debug, Clone, Copy)]
pub enum LossKind<'a> {
    /// (1/N) sum_i (<P, x_i(T)> + c0 - y_i)^2 + beta |omega|^2.
    Endpoint(&'a EndpointDataset),
    /// (1/N) sum_i integral_0^T (x_i - y_i)^2 dt + beta |omega|^2, the
    /// integral by trapezoid on the scored nodes.
    Tracking(&'a CurveDataset),
}

/// Trapezoid weights for the grid's scored nodes.
pub(crate) fn trapezoid_weights(times: &[f64]) -> Vec<f64> {
    let n = times.len();
    let mut w = vec![0.0; n];
    for j in 0..n.saturating_sub(1) {
        let h = times[j + 1] - times[j];
        w[j] += 0.5 * h;
        w[j + 1] += 0.5 * h;
    }
    w
}

pub(crate) fn endpoint_residual(
    params: &TrainableParams,
    hist: &SampleHistory,
    y: f64,
) -> Result<f64> {
    let readout = params.readout.as_ref().ok_or_else(|| {
        CoreError::InvalidSpec("endpoint loss needs a readout projection".into())
    })?;
    Ok(dot(&readout.p, hist.final_state()) + readout.c0 - y)
}

/// Per-sample data term of the tracking loss.
pub(crate) fn tracking_sample_term(
    grid: &TrainGrid,
    weights: &[f64],
    hist: &SampleHistory,
    curve: &[f64],
) -> f64 {
    let mut acc = 0.0;
    for (j, (&wj, yj)) in weights.iter().zip(curve).enumerate() {
        let dev = hist.x[grid.track_start + j][0] - yj;
        acc += wj * dev * dev;
    }
    acc
}

/// Evaluates the selected loss. `t_horizon` enters only the regularizer's
/// discrete-norm convention; the data term reads its times from the grid.
pub fn loss(
    params: &TrainableParams,
    kind: &LossKind,
    grid: &TrainGrid,
    activation: Activation,
    beta: f64,
    t_horizon: f64,
) -> Result<f64> {
    params.validate()?;
    let data_term = match kind {
        LossKind::Endpoint(ds) => {
            ds.validate(params.d)?;
            // Forwards run in parallel; the reduction stays sequential in
            // sample order so results are bit-identical across runs.
            let hists: Vec<Result<SampleHistory>> =
                batch_map(&ds.xs, |x0| forward_sample(params, grid, activation, x0));
            let mut acc = 0.0;
            for (hist, &y) in hists.into_iter().zip(&ds.ys) {
                let r = endpoint_residual(params, &hist?, y)?;
                acc += r * r;
            }
            acc / ds.xs.len() as f64
        }
        LossKind::Tracking(ds) => {
            ds.validate(grid)?;
            let weights = trapezoid_weights(grid.track_times());
            let hists: Vec<Result<SampleHistory>> =
                batch_map(&ds.sources, |s| forward_sample(params, grid, activation, &[*s]));
            let mut acc = 0.0;
            for (hist, curve) in hists.into_iter().zip(&ds.curves) {
                acc += tracking_sample_term(grid, &weights, &hist?, curve);
            }
            acc / ds.sources.len() as f64
        }
    };
    Ok(data_term + beta * params.norm_sq(t_horizon))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::types::Architecture;
    use crate::training::params::{LayerParams, Readout};

    fn perceptron_params(
        arch: Architecture,
        d: usize,
        layers: Vec<LayerParams>,
        readout: Option<Readout>,
    ) -> TrainableParams {
        let d_p = if arch == Architecture::Momentum { d } else { 0 };
        TrainableParams { arch, d, d_p, layers, readout }
    }

    #[test]
    fn zero_field_zero_targets_leaves_only_the_regularizer() {
        let params = perceptron_params(
            Architecture::FirstOrder,
            2,
            vec![
                LayerParams::Perceptron {
                    w: vec![0.0, 0.0],
                    a: vec![0.3, -0.4],
                    b: 0.7,
                };
                4
            ],
            Some(Readout { p: vec![0.0, 0.0], c0: 0.0 }),
        );
        let ds = EndpointDataset {
            xs: vec![vec![1.0, 2.0], vec![-0.5, 0.25]],
            ys: vec![0.0, 0.0],
        };
        let grid = TrainGrid::endpoint(4, 10.0);
        let beta = 1e-6;
        let got = loss(&params, &LossKind::Endpoint(&ds), &grid, Activation::Sigmoid, beta, 10.0)
            .unwrap();
        assert!((got - beta * params.norm_sq(10.0)).abs() < 1e-18);
        assert!(got > 0.0);
    }

    #[test]
    fn zero_params_momentum_flow_scores_the_raw_projection() {
        let params = perceptron_params(
            Architecture::Momentum,
            2,
            vec![
                LayerParams::Perceptron {
                    w: vec![0.0, 0.0],
                    a: vec![0.0, 0.0],
                    b: 0.0,
                };
                8
            ],
            Some(Readout { p: vec![1.0, -1.0], c0: 0.25 }),
        );
        let ds = EndpointDataset {
            xs: vec![vec![1.0, 0.5], vec![0.0, 2.0]],
            ys: vec![1.0, -1.0],
        };
        let grid = TrainGrid::endpoint(8, 10.0);
        let got = loss(&params, &LossKind::Endpoint(&ds), &grid, Activation::Sigmoid, 0.0, 10.0)
            .unwrap();
        // The flow is the identity, so residuals are computable by hand:
        // (1 - 0.5 + 0.25 - 1)^2 and (0 - 2 + 0.25 + 1)^2 averaged.
        let want = ((-0.25_f64).powi(2) + (-0.75_f64).powi(2)) / 2.0;
        assert!((got - want).abs() < 1e-15, "got {got}, want {want}");
    }

    #[test]
    fn constant_offset_tracking_integrates_to_t_c_squared() {
        // Zero-dynamics scalar memory model: x stays at 0; target curve is
        // the constant c, so the integral is exactly T c^2 and the
        // trapezoid rule is exact for the constant integrand.
        let c = 0.6;
        let params = TrainableParams {
            arch: Architecture::Memory,
            d: 1,
            d_p: 2,
            layers: vec![
                LayerParams::Memory {
                    w: 0.0,
                    a: 0.0,
                    c: vec![0.0, 0.0],
                    b1: 0.0,
                    b2: 0.0,
                    u: vec![0.0, 0.0],
                    d_gate: 0.0,
                    f: 0.0,
                };
                22
            ],
            readout: None,
        };
        let grid = TrainGrid::tracking(22, 10.0, 1.0).unwrap();
        let ds = CurveDataset {
            sources: vec![0.0],
            curves: vec![vec![c; grid.track_times().len()]],
        };
        let got = loss(&params, &LossKind::Tracking(&ds), &grid, Activation::Relu, 0.0, 10.0)
            .unwrap();
        assert!((got - 10.0 * c * c).abs() < 1e-12, "got {got}");
    }
}

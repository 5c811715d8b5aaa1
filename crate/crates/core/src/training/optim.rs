//! Gradient descent with optional heavy-ball momentum.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dynamics::types::{Activation, Architecture};
use crate::error::{CoreError, Result};
use crate::training::forward::TrainGrid;
use crate::training::grad::gradient;
use crate::training::loss::LossKind;
use crate::training::params::{LayerParams, Readout, TrainableParams};

/// Loss above this is treated as divergence and stops the run.
pub const DIVERGENCE_CAP: f64 = 1e12;

/// Hyperparameters for a training run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainConfig {
    pub beta: f64,
    pub learning_rate: f64,
    pub iterations: usize,
    pub seed: u64,
    pub t_horizon: f64,
    /// Warmup span before t = 0; only meaningful for tracking runs.
    pub tau: f64,
    pub activation: Activation,
    /// Heavy-ball coefficient in [0, 1); 0 is plain gradient descent.
    pub momentum_coef: f64,
    pub n_layers: usize,
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.beta.is_finite() && self.beta >= 0.0) {
            return Err(CoreError::InvalidSpec("beta must be finite and >= 0".into()));
        }
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return Err(CoreError::InvalidSpec("learning rate must be positive".into()));
        }
        if !(self.t_horizon.is_finite() && self.t_horizon > 0.0) {
            return Err(CoreError::InvalidSpec("time horizon must be positive".into()));
        }
        if !(self.tau.is_finite() && self.tau >= 0.0) {
            return Err(CoreError::InvalidSpec("warmup span must be >= 0".into()));
        }
        if !(0.0..1.0).contains(&self.momentum_coef) {
            return Err(CoreError::InvalidSpec(
                "momentum coefficient must lie in [0, 1)".into(),
            ));
        }
        if self.n_layers == 0 {
            return Err(CoreError::InvalidSpec("need at least one layer".into()));
        }
        Ok(())
    }
}

/// Result of a training run. `history` holds the loss before each step
/// plus the final loss; on divergence the offending value is kept and
/// `diverged` is set instead of returning an error.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainOutcome {
    pub params: TrainableParams,
    pub history: Vec<f64>,
    pub diverged: bool,
}

/// Draws initial parameters uniformly from (-0.5, 0.5), reproducibly.
pub fn init_params(
    arch: Architecture,
    d: usize,
    d_p: usize,
    n_layers: usize,
    with_readout: bool,
    seed: u64,
) -> TrainableParams {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut val = move || rng.gen_range(-0.5..0.5);
    let layers = (0..n_layers)
        .map(|_| match arch {
            Architecture::Memory => LayerParams::Memory {
                w: val(),
                a: val(),
                c: (0..d_p).map(|_| val()).collect(),
                b1: val(),
                b2: val(),
                u: (0..d_p).map(|_| val()).collect(),
                d_gate: val(),
                f: val(),
            },
            _ => LayerParams::Perceptron {
                w: (0..d).map(|_| val()).collect(),
                a: (0..d).map(|_| val()).collect(),
                b: val(),
            },
        })
        .collect();
    let readout = with_readout.then(|| Readout {
        p: (0..d).map(|_| val()).collect(),
        c0: val(),
    });
    TrainableParams { arch, d, d_p, layers, readout }
}

/// Runs full-batch gradient descent from `initial` and returns the final
/// parameters with the loss history.
pub fn train(
    initial: &TrainableParams,
    kind: &LossKind,
    grid: &TrainGrid,
    config: &TrainConfig,
) -> Result<TrainOutcome> {
    config.validate()?;
    initial.validate()?;
    let mut flat = initial.as_flat();
    let mut velocity = vec![0.0; flat.len()];
    let mut history = Vec::with_capacity(config.iterations + 1);
    let mut params = initial.clone();

    for _ in 0..config.iterations {
        let (value, grad) = gradient(
            &params,
            kind,
            grid,
            config.activation,
            config.beta,
            config.t_horizon,
        )?;
        history.push(value);
        if value > DIVERGENCE_CAP {
            return Ok(TrainOutcome { params, history, diverged: true });
        }
        let g = grad.as_flat();
        for i in 0..flat.len() {
            velocity[i] = config.momentum_coef * velocity[i] - config.learning_rate * g[i];
            flat[i] += velocity[i];
        }
        params = params.from_flat(&flat)?;
    }
    let final_loss = crate::training::loss::loss(
        &params,
        kind,
        grid,
        config.activation,
        config.beta,
        config.t_horizon,
    )?;
    history.push(final_loss);
    let diverged = final_loss > DIVERGENCE_CAP;
    Ok(TrainOutcome { params, history, diverged })
}

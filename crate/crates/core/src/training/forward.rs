//! Euler unrolls of the three architectures with full state histories,
//! shared by the losses and the reverse-mode sweep.

use crate::dynamics::types::{Activation, Architecture};
use crate::error::{CoreError, Result};
use crate::training::params::{LayerParams, TrainableParams};

/// Layer-grid node times. One layer spans consecutive nodes; a tracking
/// grid places node `track_start` exactly at t = 0 so the warmup
/// `[-tau, 0)` and the scored window `[0, T]` split on a node.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainGrid {
    pub times: Vec<f64>,
    pub track_start: usize,
}

impl TrainGrid {
    /// Uniform grid over [0, T] for endpoint losses.
    pub fn endpoint(n_layers: usize, t_horizon: f64) -> TrainGrid {
        let h = t_horizon / n_layers as f64;
        TrainGrid {
            times: (0..=n_layers).map(|k| k as f64 * h).collect(),
            track_start: 0,
        }
    }

    /// Grid over [-tau, T] splitting the layer budget between warmup and
    /// scored window proportionally to their lengths, each side uniform,
    /// with t = 0 always a node.
    pub fn tracking(n_layers: usize, t_horizon: f64, tau: f64) -> Result<TrainGrid> {
        if n_layers < 2 {
            return Err(CoreError::InvalidSpec(
                "tracking grids need at least two layers (warmup and scored window)".into(),
            ));
        }
        let share = (n_layers as f64 * tau / (t_horizon + tau)).round() as usize;
        let warm = share.clamp(1, n_layers - 1);
        let h_w = tau / warm as f64;
        let h_t = t_horizon / (n_layers - warm) as f64;
        let mut times: Vec<f64> = (0..warm).map(|k| -tau + k as f64 * h_w).collect();
        times.extend((0..=n_layers - warm).map(|k| k as f64 * h_t));
        Ok(TrainGrid {
            times,
            track_start: warm,
        })
    }

    pub fn n_layers(&self) -> usize {
        self.times.len() - 1
    }

    /// Node times from `track_start` on: where tracking losses are scored.
    pub fn track_times(&self) -> &[f64] {
        &self.times[self.track_start..]
    }
}

/// Full state history of one sample: `x[k]` is the state at node k, and
/// `aux[k]` the velocity (momentum) or memory bank (memory); empty for the
/// first-order flow.
#[derive(Debug, Clone)]
pub struct SampleHistory {
    pub x: Vec<Vec<f64>>,
    pub aux: Vec<Vec<f64>>,
}

impl SampleHistory {
    pub fn final_state(&self) -> &[f64] {
        self.x.last().expect("history has at least the initial node")
    }
}

/// Unrolls the Euler recursion for one sample.
///
/// First-order: x_{k+1} = x_k + h w_k sigma(<a_k, x_k> + b_k).
/// Momentum (unit damping): x_{k+1} = x_k + h v_k,
///   v_{k+1} = v_k + h (w_k sigma(<a_k, x_k> + b_k) - v_k), v_0 = 0.
/// Memory (scalar state): x_{k+1} = x_k + h (w_k sigma(s_k) + b2_k) with
///   s_k = a_k x_k + <c_k, p_k> + b1_k, p_{k+1} = p_k + h u_k sigma(q_k)
///   with q_k = d_k x_k + f_k, p_0 = 0.
pub fn forward_sample(
    params: &TrainableParams,
    grid: &TrainGrid,
    activation: Activation,
    x0: &[f64],
) -> Result<SampleHistory> {
    if grid.n_layers() != params.layers.len() {
        return Err(CoreError::ShapeMismatch {
            context: "layer grid",
            expected: params.layers.len(),
            got: grid.n_layers(),
        });
    }
    if x0.len() != params.d {
        return Err(CoreError::ShapeMismatch {
            context: "initial state",
            expected: params.d,
            got: x0.len(),
        });
    }
    let n = params.layers.len();
    let mut x = Vec::with_capacity(n + 1);
    let mut aux = Vec::with_capacity(n + 1);
    x.push(x0.to_vec());
    let aux_dim = match params.arch {
        Architecture::FirstOrder => 0,
        Architecture::Momentum => params.d,
        Architecture::Memory => params.d_p,
    };
    aux.push(vec![0.0; aux_dim]);

    for (k, layer) in params.layers.iter().enumerate() {
        let h = grid.times[k + 1] - grid.times[k];
        let xs = &x[k];
        let au = &aux[k];
        let (mut xn, mut an) = (xs.clone(), au.clone());
        match (params.arch, layer) {
            (Architecture::FirstOrder, LayerParams::Perceptron { w, a, b }) => {
                let s = dot(a, xs) + b;
                let g = activation.value(s);
                for r in 0..params.d {
                    xn[r] += h * w[r] * g;
                }
            }
            (Architecture::Momentum, LayerParams::Perceptron { w, a, b }) => {
                let s = dot(a, xs) + b;
                let g = activation.value(s);
                for r in 0..params.d {
                    xn[r] += h * au[r];
                    an[r] += h * (w[r] * g - au[r]);
                }
            }
            (Architecture::Memory, LayerParams::Memory { w, a, c, b1, b2, u, d_gate, f }) => {
                let s = a * xs[0] + dot(c, au) + b1;
                let q = d_gate * xs[0] + f;
                xn[0] += h * (w * activation.value(s) + b2);
                let gq = activation.value(q);
                for j in 0..params.d_p {
                    an[j] += h * u[j] * gq;
                }
            }
            _ => {
                return Err(CoreError::InvalidSpec(format!(
                    "layer {k} does not match architecture {:?}",
                    params.arch
                )));
            }
        }
        if !(xn.iter().all(|v| v.is_finite()) && an.iter().all(|v| v.is_finite())) {
            return Err(CoreError::NonFiniteState {
                step: format!("forward layer {k}"),
            });
        }
        x.push(xn);
        aux.push(an);
    }
    Ok(SampleHistory { x, aux })
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Discretizes a synthesized scalar-state memory schedule into one layer
/// per constant-control piece, so the trained-model machinery can evaluate
/// controller output.
///
/// Segment boundaries become grid nodes (Euler is exact on segments whose
/// rates are constant); pieces longer than `max_step` are subdivided, which
/// matters for segments whose gates move (linear-regime tracking intervals
/// and ramp offsets, resolved at piece midpoints); `sample_times` are
/// inserted as extra nodes so losses can be scored on them.
pub fn schedule_to_params(
    schedule: &crate::dynamics::types::ControlSchedule,
    sample_times: &[f64],
    max_step: f64,
) -> Result<(TrainableParams, TrainGrid)> {
    use crate::dynamics::types::{ControlValues, MovingOffset};

    let spec = &schedule.model;
    if spec.architecture != Architecture::Memory || spec.d != 1 {
        return Err(CoreError::InvalidSpec(
            "schedule discretization expects the scalar-state memory model".into(),
        ));
    }
    if !(max_step > 0.0) {
        return Err(CoreError::InvalidSpec("max_step must be positive".into()));
    }
    let mut layers = Vec::new();
    let mut times = vec![schedule.t0];
    for seg in &schedule.segments {
        let ControlValues::Memory { w, a, c, b1, b2, u, d_vec, f } = &seg.params else {
            return Err(CoreError::InvalidSpec(
                "non-memory segment in a memory schedule".into(),
            ));
        };
        let slope = match seg.offset {
            None => 0.0,
            Some(MovingOffset::Ramp { slope }) => slope,
            Some(MovingOffset::TrackPoint { .. }) => {
                return Err(CoreError::InvalidSpec(
                    "tracked-point offsets cannot be discretized into layers".into(),
                ));
            }
        };
        // Piece boundaries: uniform subdivision at max_step, plus any
        // requested sample time interior to the segment.
        let seg_end = seg.t_start + seg.duration;
        let n_pieces = (seg.duration / max_step).ceil().max(1.0) as usize;
        let mut cuts: Vec<f64> = (1..n_pieces)
            .map(|j| seg.t_start + seg.duration * j as f64 / n_pieces as f64)
            .collect();
        for &ts in sample_times {
            if ts > seg.t_start + 1e-12 && ts < seg_end - 1e-12 {
                cuts.push(ts);
            }
        }
        cuts.push(seg_end);
        cuts.sort_by(f64::total_cmp);
        cuts.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
        let mut lo = seg.t_start;
        for hi in cuts {
            let mid = 0.5 * (lo + hi);
            layers.push(LayerParams::Memory {
                w: w[0],
                a: a[0],
                c: c.clone(),
                b1: b1[0],
                b2: b2[0],
                u: u.clone(),
                d_gate: d_vec[0],
                f: f + slope * (mid - seg.t_start),
            });
            times.push(hi);
            lo = hi;
        }
    }
    let track_start = times
        .iter()
        .position(|&t| t >= -1e-12)
        .unwrap_or(0);
    let params = TrainableParams {
        arch: Architecture::Memory,
        d: 1,
        d_p: spec.d_p,
        layers,
        readout: None,
    };
    Ok((params, TrainGrid { times, track_start }))
}

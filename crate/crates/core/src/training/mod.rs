//! Gradient training of the discretized models.
//!
//! Continuous flows are unrolled with explicit Euler steps on a fixed
//! layer grid, scored with an endpoint or tracking loss, and trained by
//! full-batch gradient descent with handwritten reverse-mode gradients.
//! Synthesized control schedules convert into the same parameter layout,
//! so controller outputs can be evaluated and refined by the trainer.

mod forward;
mod grad;
mod loss;
mod optim;
mod params;

pub use forward::{forward_sample, schedule_to_params, SampleHistory, TrainGrid};
pub use grad::gradient;
pub use loss::{loss, CurveDataset, EndpointDataset, LossKind};
pub use optim::{init_params, train, TrainConfig, TrainOutcome, DIVERGENCE_CAP};
pub use params::{LayerParams, Readout, TrainableParams};

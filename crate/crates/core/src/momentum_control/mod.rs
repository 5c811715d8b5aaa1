//! Control synthesis for the damped second-order flow.
//!
//! `synthesize` steers finitely many resting points onto their targets at a
//! shared final time with piecewise-constant controls; `compressive_schedule`
//! contracts a box toward a coordinate hyperplane; `approximate_function`
//! combines both into an endpoint map realizing a piecewise-constant
//! function on a rectangular grid.

mod affine;
pub mod approx;
pub mod compress;
pub mod prep;
pub mod problem;
pub mod synth;

pub use approx::{approximate_function, ApproxReport, GridCell};
pub use compress::{
    compressive_schedule, contraction_ratio, contraction_velocity, duration_for_ratio,
    DEFAULT_COMPRESSION_WEIGHT,
};
pub use prep::{prepare_dataset, shift_factor, shift_stop, PrepOutcome};
pub use problem::{ControlProblem, SynthesisTrace, CONTROL_MAGNITUDE_CAP};
pub use synth::{
    control_first_component, control_remaining_components, plan, synthesize, MomentumPlan,
};

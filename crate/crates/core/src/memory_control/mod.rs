//! Control synthesis for the memory-augmented flow.
//!
//! The model couples a gated state equation to a memory bank whose rates
//! read only the state, yet both halves are exactly controllable at once:
//! every builder here moves points with segments whose gates read only
//! coordinates that segment freezes, so endpoints follow from linear
//! bookkeeping and the integrator is used purely as a verifier.

mod exact;
mod pairwise;
mod simultaneous;
mod surrogate;
mod tracking;
mod universal;

pub use simultaneous::{
    memory_simultaneous_control, pairwise_simultaneous_control, MemoryControlProblem,
};
pub use surrogate::{
    build_surrogate, SampledCurve, SurrogateReport, TrackingTarget, DEFAULT_WARMUP,
};
pub use tracking::{tracked_sup_error, tracking_control};
pub use universal::{measured_sup_l2, universal_tracking, UniversalProblem, UniversalReport};

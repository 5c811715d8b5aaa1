//! Shared dynamics layer: model/control types, exact propagators for the
//! regimes that admit them, eigenvalue classification of the self-coupled
//! damped flow, vector fields, and fixed-step integrators.

pub mod closed_form;
pub mod field;
pub mod integrate;
pub mod regime;
pub mod types;

pub use closed_form::{
    coef_a, coef_b, coef_e, propagate_damped, propagate_exp_affine, propagate_forced,
    propagate_self_coupled, solve_two_segment_forcing,
};
pub use integrate::{flow_endpoint, integrate_euler, integrate_reference, integrate_rk4, reference_endpoint};
pub use regime::{eigen_regime, RegimeClass, RegimeReport};
pub use types::{
    project_state, Activation, Architecture, ControlSchedule, ControlSegment, ControlValues,
    ModelSpec, MovingOffset, PhasePoint, Trajectory, MIN_SEGMENT_DURATION,
};

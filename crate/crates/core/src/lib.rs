//! Controllable continuous-depth networks as dynamical systems.
//!
//! Three architectures are modeled: a first-order perceptron flow
//! `x' = w sigma(<a,x> + b)`, a damped second-order flow
//! `eps x'' + x' = w sigma(<a,x> + b)` whose velocity doubles the phase
//! space, and an augmented flow with auxiliary states
//! `x' = W sigma_vec(Ax + Cp + b1) + b2`, `p' = u sigma(<d,x> + f)` whose
//! auxiliary vector acts as a writable memory.
//!
//! On top of the shared simulation layer ([`dynamics`]), the crate provides
//! constructive synthesis of piecewise-constant controls that steer finite
//! point sets exactly ([`momentum_control`], [`memory_control`]), keep
//! trajectories on prescribed curves ([`memory_control::tracking_control`]),
//! gradient-based training of the discretized models ([`training`]), and the
//! desk-scale experiment pipelines built from them ([`experiments`]).

pub mod dynamics;
pub mod error;
pub mod experiments;
pub mod memory_control;
pub mod momentum_control;
pub mod par;
pub mod training;

pub use error::{CoreError, Result};

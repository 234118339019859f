//! Model-based adaptive dynamic programming with terminal-boundary clipping.
//!
//! When discretized time drives an agent across a terminal boundary, the
//! final step overshoots: the agent stops strictly beyond the boundary. For
//! algorithms that differentiate the environment's model functions — BPTT
//! for control, DHP — that overshoot distorts or destroys the learning
//! gradient. The fix is to *clip* the final transition at the boundary's
//! tangent plane and differentiate through the clipped model and cost
//! functions. This crate implements:
//!
//! - the clipping fraction, clipped transitions, and all of their analytic
//!   derivatives ([`clip`]);
//! - trajectory unrolling with and without clipping ([`traj`]);
//! - BPTT-for-control, DHP and HDP with the clipped final-step Q-gradients
//!   ([`algo`]), on shortcut-connected MLP actors and critics ([`mlp`],
//!   [`nets`]);
//! - the vertical-lander and cart-pole benchmarks with analytic Jacobians
//!   ([`envs`]);
//! - central-difference verification of every analytic derivative
//!   ([`gradcheck`]);
//! - a CSV experiment runner ([`runner`], [`config`]) behind a thin CLI.
//!
//! See the `examples/` directory for runnable walkthroughs of each piece.

pub mod algo;
pub mod clip;
pub mod config;
pub mod env;
pub mod envs;
pub mod error;
pub mod gradcheck;
pub mod linalg;
pub mod mlp;
pub mod nets;
pub mod runner;
pub mod traj;

pub use algo::{
    bptt_gradient, bptt_train_step, dhp_episode, dhp_train_step, hdp_episode, hdp_train_step,
    AlgoConfig, IterationStats,
};
pub use clip::{
    clip_fraction_gradients, clipped_jacobians, clipped_q_gradients, clipped_transition,
    clipping_fraction, ClippedJacobians, QGradients,
};
pub use env::{Action, Environment, ModelJacobians, NetIo, Plane, State};
pub use error::{Error, Result};
pub use mlp::{MlpNet, OutputActivation};
pub use nets::{draw_start_batch, Actor, ScalarCritic, VectorCritic};
pub use traj::{advance, evaluate_return, unroll, ClipEvent, StepOutcome, Trajectory};

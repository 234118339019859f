//! Benchmark environments with analytic model and cost derivatives.

mod cartpole;
mod fixed_horizon;
mod lander;

pub use cartpole::{CartPole, CartPoleParams};
pub use fixed_horizon::FixedHorizon;
pub use lander::{Lander, LanderParams};

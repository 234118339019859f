//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// The final transition is (numerically) parallel to the terminal plane,
    /// so the clipping fraction and its derivatives are undefined.
    #[error("degenerate plane crossing: |v·n| = {v_dot_n:.3e} below threshold {threshold:.3e}")]
    DegeneratePlane { v_dot_n: f64, threshold: f64 },

    /// The clipping fraction fell outside [0, 1] by more than the
    /// floating-point tolerance; the caller passed an inconsistent crossing.
    #[error("clipping fraction {lambda} outside [0, 1]")]
    LambdaOutOfRange { lambda: f64 },

    /// An unroll hit the step cap without reaching a terminal state.
    /// This signals a runaway policy, distinct from a successful episode.
    #[error("trajectory truncated after {steps} steps without termination")]
    Truncated { steps: usize },

    /// Too many unrolls hit the step cap: the experiment is producing
    /// runaway policies rather than learning curves.
    #[error("{truncated} of {total} iterations truncated; runaway policies")]
    TruncationFlood { truncated: usize, total: usize },

    /// `boundary_query` was asked about a transition that does not cross
    /// any of the environment's terminal planes.
    #[error("no terminal boundary crossed by the final transition")]
    NoBoundaryCrossed,

    /// Post-noise action escaped the sanity range accepted by the model.
    #[error("action component {value} outside sanity range [{lo}, {hi}]")]
    ActionOutOfRange { value: f64, lo: f64, hi: f64 },

    /// Gradient-check sampler could not find a boundary-crossing transition.
    #[error("failed to sample a boundary-crossing transition in {tries} tries")]
    SamplingFailed { tries: usize },

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

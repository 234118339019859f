//! Environment contract and the domain types shared by every algorithm.
//!
//! An [`Environment`] bundles the discrete-time model function `f(x, a)`, the
//! step cost `U(x, a)`, the terminal cost `φ(x)` with its gradient, terminal
//! membership, analytic model Jacobians, and the tangent plane of whichever
//! terminal boundary a transition crosses. All of it must be deterministic
//! and side-effect free; environments are shared read-only across trials.

use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::linalg::{dot, norm, Jacobian};

/// State vector. Dimension and units are fixed by the owning environment.
#[derive(Debug, Clone, PartialEq)]
pub struct State(pub Vec<f64>);

impl State {
    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }
}

impl std::ops::Index<usize> for State {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

/// Action vector (both benchmark environments are one-dimensional).
#[derive(Debug, Clone, PartialEq)]
pub struct Action(pub Vec<f64>);

impl Action {
    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

impl std::ops::Index<usize> for Action {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

/// Tangent plane of a terminal boundary, `(x − point)·normal = 0`.
///
/// Normals are not required to be unit length; every clipping formula is
/// scale-invariant in `normal`.
#[derive(Debug, Clone, PartialEq)]
pub struct Plane {
    pub point: Vec<f64>,
    pub normal: Vec<f64>,
    /// Stable label for reports and trajectory signatures.
    pub name: &'static str,
}

impl Plane {
    pub fn new(point: Vec<f64>, normal: Vec<f64>, name: &'static str) -> Self {
        assert!(norm(&normal) > 0.0, "plane normal must be nonzero");
        assert_eq!(point.len(), normal.len(), "plane dims");
        Plane {
            point,
            normal,
            name,
        }
    }

    /// Signed offset of `x` from the plane, `(x − point)·normal`.
    pub fn offset(&self, x: &[f64]) -> f64 {
        let mut s = 0.0;
        for i in 0..x.len() {
            s += (x[i] - self.point[i]) * self.normal[i];
        }
        s
    }
}

/// Analytic first derivatives of the model and cost functions at `(x, a)`.
///
/// Layout follows the transposed-Jacobian convention of [`Jacobian`]:
/// `df_dx.get(i, j) = ∂f^j/∂x^i`.
#[derive(Debug, Clone)]
pub struct ModelJacobians {
    pub df_dx: Jacobian,
    pub df_da: Jacobian,
    pub du_dx: Vec<f64>,
    pub du_da: Vec<f64>,
}

/// Per-environment network wiring: which state components the MLPs see (and
/// at what scale), and the affine map from raw network output to action.
///
/// The state scaling and the action rescale are part of the actor/critic
/// functions for every derivative product, so the chain rule has to run
/// through both ends.
#[derive(Debug, Clone)]
pub struct NetIo {
    /// Network input `r` reads `scale * x[component]`.
    pub input_map: Vec<(usize, f64)>,
    /// Action components: `a[j] = offset[j] + slope[j] * y[j]`.
    pub action_offset: Vec<f64>,
    pub action_slope: Vec<f64>,
}

impl NetIo {
    pub fn net_in_dim(&self) -> usize {
        self.input_map.len()
    }

    pub fn action_dim(&self) -> usize {
        self.action_slope.len()
    }

    /// Scale a raw state into network-input coordinates.
    pub fn scale_state(&self, x: &State) -> Vec<f64> {
        self.input_map.iter().map(|&(c, s)| s * x[c]).collect()
    }

    /// Embed a network-input-space gradient back into raw state space
    /// (adjoint of [`NetIo::scale_state`]; dropped components get zero).
    pub fn embed_gradient(&self, state_dim: usize, g_net: &[f64]) -> Vec<f64> {
        assert_eq!(g_net.len(), self.input_map.len());
        let mut out = vec![0.0; state_dim];
        for (r, &(c, s)) in self.input_map.iter().enumerate() {
            out[c] += s * g_net[r];
        }
        out
    }

    /// Project a raw state-space gradient into network-input coordinates
    /// (inverse scaling on the mapped components, dropping the rest).
    pub fn project_gradient(&self, g_state: &[f64]) -> Vec<f64> {
        self.input_map
            .iter()
            .map(|&(c, s)| g_state[c] / s)
            .collect()
    }

    pub fn rescale_action(&self, y: &[f64]) -> Action {
        Action(
            y.iter()
                .zip(self.action_offset.iter().zip(&self.action_slope))
                .map(|(yi, (off, sl))| off + sl * yi)
                .collect(),
        )
    }
}

/// Deterministic episodic environment with analytic derivatives.
pub trait Environment: Sync {
    fn name(&self) -> &'static str;

    fn state_dim(&self) -> usize;

    fn action_dim(&self) -> usize;

    /// Model function and step cost: `(f(x, a), U(x, a))`.
    fn step(&self, x: &State, a: &Action) -> Result<(State, f64)>;

    /// Analytic Jacobians of `f` and `U` at `(x, a)`.
    fn jacobians(&self, x: &State, a: &Action) -> ModelJacobians;

    fn is_terminal(&self, x: &State) -> bool;

    /// Terminal cost `φ(x)` and its gradient `∂φ/∂x`.
    fn terminal_cost(&self, x: &State) -> (f64, Vec<f64>);

    /// Tangent plane of the terminal boundary crossed first by the segment
    /// from `x_from` (non-terminal) to `x_to` (terminal, unclipped). When
    /// several planes are crossed, the one with the smallest clipping
    /// fraction wins.
    fn boundary_query(&self, x_from: &State, x_to: &State) -> Result<Plane>;

    /// Network wiring for actors and critics attached to this environment.
    fn net_io(&self) -> NetIo;

    /// Step cap for unrolls; reaching it is a truncation error.
    fn max_steps(&self) -> usize;

    /// Draw a start state from the experiment's start region.
    fn sample_start(&self, rng: &mut ChaCha8Rng) -> State;

    /// Draw an action from the environment's natural action range
    /// (used by the gradient-check samplers, not by learning).
    fn sample_action(&self, rng: &mut ChaCha8Rng) -> Action;
}

/// Pick, among the planes actually crossed by the segment `x → x_next`, the
/// one crossed first (smallest clipping fraction). Shared by the concrete
/// environments' `boundary_query` implementations.
pub fn first_crossed_plane(
    x: &State,
    x_next: &State,
    candidates: &[Plane],
) -> Result<Plane> {
    let mut best: Option<(f64, &Plane)> = None;
    for plane in candidates {
        // Crossed iff the endpoints straddle the plane, with the terminal
        // side reached at the far end (offset of zero counts as reached).
        // The test is sign-agnostic in the normal's orientation.
        let from = plane.offset(x.as_slice());
        let to = plane.offset(x_next.as_slice());
        let crossed = (from > 0.0 && to <= 0.0) || (from < 0.0 && to >= 0.0);
        if !crossed {
            continue;
        }
        let lambda = from / (from - to);
        match best {
            Some((l, _)) if l <= lambda => {}
            _ => best = Some((lambda, plane)),
        }
    }
    best.map(|(_, p)| p.clone()).ok_or(Error::NoBoundaryCrossed)
}

/// Dot product against a plane normal, `v·n`.
pub fn normal_component(v: &[f64], plane: &Plane) -> f64 {
    dot(v, &plane.normal)
}

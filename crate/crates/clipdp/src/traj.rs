//! Trajectory unrolling with optional terminal-boundary clipping, and the
//! discounted return.
//!
//! With clipping enabled, the final transition is truncated at the first
//! terminal plane it crosses: the terminal state becomes the intersection
//! point, only the fraction `λ` of the final step cost is charged, and the
//! terminal cost is discounted by `γ^λ` instead of `γ`. With clipping
//! disabled the raw model output stands, with full cost and discount.

use rand_chacha::ChaCha8Rng;

use crate::clip::clipping_fraction;
use crate::env::{Action, Environment, Plane, State};
use crate::error::{Error, Result};
use crate::linalg::gamma_pow;
use crate::nets::Actor;

/// Record of a clipped final transition.
#[derive(Debug, Clone)]
pub struct ClipEvent {
    pub lambda: f64,
    pub plane: Plane,
    /// Step index of the transition that was clipped (`T − 1`).
    pub penultimate_index: usize,
}

/// A completed episode. `states` has length `T + 1`; `actions` and
/// `step_costs` have length `T`. Step costs are the raw `U(x_t, a_t)`
/// values; the clipping fraction is applied where returns are evaluated.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub states: Vec<State>,
    pub actions: Vec<Action>,
    pub step_costs: Vec<f64>,
    /// `φ` at the (possibly clipped) terminal state.
    pub terminal_cost: f64,
    pub clip: Option<ClipEvent>,
    pub return_value: f64,
}

impl Trajectory {
    /// Terminal index `T` (number of transitions taken).
    pub fn len(&self) -> usize {
        self.actions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }

    pub fn terminal_state(&self) -> &State {
        self.states.last().unwrap()
    }

    /// Episode duration in steps, fractional when the final step was
    /// clipped: `T − 1 + λ`.
    pub fn duration(&self) -> f64 {
        match &self.clip {
            Some(ev) => (self.len() - 1) as f64 + ev.lambda,
            None => self.len() as f64,
        }
    }

    /// Cheap identity for detecting that a perturbed re-unroll terminated
    /// the same way (same length, same boundary): finite-difference checks
    /// must skip perturbations that change this.
    pub fn signature(&self) -> (usize, Option<&'static str>) {
        (self.len(), self.clip.as_ref().map(|c| c.plane.name))
    }
}

/// One environment transition, clipped at the terminal boundary when
/// requested.
#[derive(Debug, Clone)]
pub struct StepOutcome {
    pub next: State,
    /// Raw step cost `U(x, a)` (unscaled by `λ`).
    pub cost: f64,
    pub terminal: bool,
    /// `(λ, plane)` when clipping was applied to this transition.
    pub clip: Option<(f64, Plane)>,
}

/// Advance one step. When the raw model output is terminal and
/// `clip_enabled` holds, the returned state is the plane intersection.
pub fn advance(
    env: &dyn Environment,
    x: &State,
    a: &Action,
    clip_enabled: bool,
) -> Result<StepOutcome> {
    let (f_next, cost) = env.step(x, a)?;
    if !env.is_terminal(&f_next) {
        return Ok(StepOutcome {
            next: f_next,
            cost,
            terminal: false,
            clip: None,
        });
    }
    if !clip_enabled {
        return Ok(StepOutcome {
            next: f_next,
            cost,
            terminal: true,
            clip: None,
        });
    }
    let plane = env.boundary_query(x, &f_next)?;
    let lambda = clipping_fraction(x, &f_next, &plane)?;
    let clipped = crate::clip::interpolate(x, &f_next, lambda);
    Ok(StepOutcome {
        next: clipped,
        cost,
        terminal: true,
        clip: Some((lambda, plane)),
    })
}

/// Unroll a trajectory from `x0` under the actor (plus optional Gaussian
/// exploration noise on the rescaled actions), stopping at the first
/// terminal state. Reaching `max_steps` without termination is an error.
#[allow(clippy::too_many_arguments)]
pub fn unroll(
    env: &dyn Environment,
    actor: &Actor,
    x0: &State,
    gamma: f64,
    clip_enabled: bool,
    max_steps: usize,
    noise_std: f64,
    rng: &mut ChaCha8Rng,
) -> Result<Trajectory> {
    assert!(!env.is_terminal(x0), "unroll requires a non-terminal start");
    assert!(gamma > 0.0 && gamma <= 1.0, "gamma must be in (0, 1]");
    assert!(max_steps >= 1);
    assert!(noise_std >= 0.0);

    let mut states = vec![x0.clone()];
    let mut actions = Vec::new();
    let mut step_costs = Vec::new();
    let mut x = x0.clone();

    for step in 0..max_steps {
        let a = actor.act_noisy(&x, noise_std, rng);
        let out = advance(env, &x, &a, clip_enabled)?;
        actions.push(a);
        step_costs.push(out.cost);
        states.push(out.next.clone());
        if out.terminal {
            let (phi, _) = env.terminal_cost(&out.next);
            let mut traj = Trajectory {
                states,
                actions,
                step_costs,
                terminal_cost: phi,
                clip: out.clip.map(|(lambda, plane)| ClipEvent {
                    lambda,
                    plane,
                    penultimate_index: step,
                }),
                return_value: 0.0,
            };
            traj.return_value = evaluate_return(&traj, gamma);
            return Ok(traj);
        }
        x = out.next;
    }
    Err(Error::Truncated { steps: max_steps })
}

/// Discounted return of a completed trajectory:
///
/// ```text
/// unclipped:  Σ_{t<T} γ^t U_t                        + γ^T φ
/// clipped:    Σ_{t<T−1} γ^t U_t + γ^{T−1} (λ U_{T−1} + γ^λ φ)
/// ```
///
/// Forward summation in time order; this is the exact accumulation the
/// unroll stores in `return_value`.
pub fn evaluate_return(traj: &Trajectory, gamma: f64) -> f64 {
    let t_last = traj.step_costs.len() - 1;
    let mut ret = 0.0;
    let mut disc = 1.0;
    for &cost in &traj.step_costs[..t_last] {
        ret += disc * cost;
        disc *= gamma;
    }
    // The final term has the same association in both branches so that a
    // clipped trajectory with λ = 1 accumulates bit-identically to the
    // unclipped one.
    let final_cost = traj.step_costs[t_last];
    let (lambda, step_discount) = match &traj.clip {
        Some(ev) => (ev.lambda, gamma_pow(gamma, ev.lambda)),
        None => (1.0, gamma),
    };
    ret + disc * (lambda * final_cost + step_discount * traj.terminal_cost)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bare_traj(costs: Vec<f64>, phi: f64, clip: Option<ClipEvent>) -> Trajectory {
        let n = costs.len();
        Trajectory {
            states: vec![State(vec![0.0]); n + 1],
            actions: vec![Action(vec![0.0]); n],
            step_costs: costs,
            terminal_cost: phi,
            clip,
            return_value: 0.0,
        }
    }

    #[test]
    fn undiscounted_unclipped_sum() {
        let t = bare_traj(vec![1.0, 1.0], 0.0, None);
        assert_eq!(evaluate_return(&t, 1.0), 2.0);
    }

    #[test]
    fn single_clipped_step() {
        let ev = ClipEvent {
            lambda: 0.5,
            plane: Plane::new(vec![0.0], vec![1.0], "p"),
            penultimate_index: 0,
        };
        let t = bare_traj(vec![0.8], 10.0, Some(ev));
        assert_eq!(evaluate_return(&t, 1.0), 0.5 * 0.8 + 10.0);
    }

    #[test]
    fn discounted_clipped_terminal() {
        // Two steps, second clipped at λ: γ^0·U0 + γ^1(λ·U1 + γ^λ·φ).
        let lambda = 0.25;
        let ev = ClipEvent {
            lambda,
            plane: Plane::new(vec![0.0], vec![1.0], "p"),
            penultimate_index: 1,
        };
        let t = bare_traj(vec![2.0, 3.0], 5.0, Some(ev));
        let gamma: f64 = 0.9;
        let expect = 2.0 + gamma * (lambda * 3.0 + gamma.powf(lambda) * 5.0);
        assert!((evaluate_return(&t, gamma) - expect).abs() < 1e-12);
    }
}

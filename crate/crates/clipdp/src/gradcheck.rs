//! Central-difference verification of every analytic derivative in the
//! system: model Jacobians, MLP gradients, the clipped-function derivatives,
//! and the full BPTT weight gradient.
//!
//! The oracles here only ever evaluate *functions* (the model, the clipped
//! transition, the unrolled return) and difference them numerically; they
//! never call the analytic-derivative code paths they are checking.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::clip::{
    clipped_jacobians, clipped_q_gradients, clipping_fraction, clipped_transition,
    ClippedJacobians, QGradients,
};
use crate::env::{Action, Environment, Plane, State};
use crate::error::{Error, Result};
use crate::linalg::gamma_pow;
use crate::mlp::{MlpNet, OutputActivation};
use crate::nets::Actor;
use crate::traj::unroll;

/// Outcome of one verification suite.
#[derive(Debug, Clone)]
pub struct CheckReport {
    pub name: String,
    pub samples: usize,
    pub max_rel_err: f64,
    pub max_abs_err: f64,
    pub tolerance: f64,
    pub pass: bool,
    /// Finite-difference probes discarded because the perturbation changed
    /// the discrete structure (different plane or episode length).
    pub skipped: usize,
}

impl CheckReport {
    fn new(name: impl Into<String>, tolerance: f64) -> Self {
        CheckReport {
            name: name.into(),
            samples: 0,
            max_rel_err: 0.0,
            max_abs_err: 0.0,
            tolerance,
            pass: true,
            skipped: 0,
        }
    }

    fn record(&mut self, analytic: f64, numeric: f64) {
        let abs = (analytic - numeric).abs();
        let rel = abs / analytic.abs().max(numeric.abs()).max(1.0);
        self.max_abs_err = self.max_abs_err.max(abs);
        self.max_rel_err = self.max_rel_err.max(rel);
    }

    fn finish(mut self, samples: usize) -> Self {
        self.samples = samples;
        self.pass = self.max_rel_err <= self.tolerance;
        self
    }
}

impl std::fmt::Display for CheckReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "{:<28} samples={:<4} max_rel_err={:<10.3e} max_abs_err={:<10.3e} skipped={:<3} {}",
            self.name,
            self.samples,
            self.max_rel_err,
            self.max_abs_err,
            self.skipped,
            if self.pass { "pass" } else { "FAIL" }
        )
    }
}

/// Relative error with the absolute fallback below unit magnitudes.
pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1.0)
}

/// Central-difference gradient of a scalar function:
/// component `i` is `(f(p + ε·e_i) − f(p − ε·e_i)) / 2ε`.
pub fn central_diff(
    mut f: impl FnMut(&[f64]) -> Result<f64>,
    point: &[f64],
    eps: f64,
) -> Result<Vec<f64>> {
    assert!(eps > 0.0);
    let mut grad = vec![0.0; point.len()];
    let mut probe = point.to_vec();
    for i in 0..point.len() {
        probe[i] = point[i] + eps;
        let plus = f(&probe)?;
        probe[i] = point[i] - eps;
        let minus = f(&probe)?;
        probe[i] = point[i];
        grad[i] = (plus - minus) / (2.0 * eps);
    }
    Ok(grad)
}

/// A non-degenerate boundary-crossing transition for derivative checks.
#[derive(Debug, Clone)]
pub struct CrossingSample {
    pub x: State,
    pub a: Action,
    pub f_next: State,
    pub cost: f64,
    pub plane: Plane,
    pub lambda: f64,
}

/// Random-walk the environment until a transition crosses a terminal plane
/// with a comfortably interior clipping fraction.
pub fn sample_crossing(
    env: &dyn Environment,
    rng: &mut ChaCha8Rng,
    max_tries: usize,
) -> Result<CrossingSample> {
    let mut x = env.sample_start(rng);
    for _ in 0..max_tries {
        let a = env.sample_action(rng);
        let (f_next, cost) = match env.step(&x, &a) {
            Ok(v) => v,
            Err(_) => {
                x = env.sample_start(rng);
                continue;
            }
        };
        if env.is_terminal(&f_next) {
            if let Ok(plane) = env.boundary_query(&x, &f_next) {
                if let Ok(lambda) = clipping_fraction(&x, &f_next, &plane) {
                    if (0.05..=0.95).contains(&lambda) {
                        return Ok(CrossingSample {
                            x,
                            a,
                            f_next,
                            cost,
                            plane,
                            lambda,
                        });
                    }
                }
            }
            x = env.sample_start(rng);
        } else {
            x = f_next;
        }
    }
    Err(Error::SamplingFailed { tries: max_tries })
}

/// Worst relative error of the supplied analytic clipped derivatives against
/// central differences of the clipped functions at one crossing sample.
///
/// Checks, in order: ∂λ/∂x, ∂λ/∂a, ∂f^C/∂x, ∂f^C/∂a, ∂U^C/∂x, ∂U^C/∂a, and
/// the final-step Q-gradients against differences of
/// `Q = U^C + γ^λ φ(f^C)`.
pub fn clipped_derivative_errors(
    env: &dyn Environment,
    gamma: f64,
    s: &CrossingSample,
    cj: &ClippedJacobians,
    q: &QGradients,
    eps: f64,
    report: &mut CheckReport,
) -> Result<()> {
    let n = s.x.dim();
    let m = s.a.dim();
    let plane = &s.plane;

    // λ as a function of x (plane held fixed, model re-evaluated).
    let lam_of_x = |xs: &[f64]| -> Result<f64> {
        let x = State(xs.to_vec());
        let (f_next, _) = env.step(&x, &s.a)?;
        clipping_fraction(&x, &f_next, plane)
    };
    let fd = central_diff(lam_of_x, s.x.as_slice(), eps)?;
    for i in 0..n {
        report.record(cj.dlam_dx[i], fd[i]);
    }

    let lam_of_a = |av: &[f64]| -> Result<f64> {
        let a = Action(av.to_vec());
        let (f_next, _) = env.step(&s.x, &a)?;
        clipping_fraction(&s.x, &f_next, plane)
    };
    let fd = central_diff(lam_of_a, s.a.as_slice(), eps)?;
    for i in 0..m {
        report.record(cj.dlam_da[i], fd[i]);
    }

    // Clipped model and cost as functions of x.
    for j in 0..n {
        let fc_j = |xs: &[f64]| -> Result<f64> {
            let x = State(xs.to_vec());
            let (f_next, cost) = env.step(&x, &s.a)?;
            let (clipped, _) = clipped_transition(&x, &f_next, cost, plane)?;
            Ok(clipped[j])
        };
        let fd = central_diff(fc_j, s.x.as_slice(), eps)?;
        for i in 0..n {
            report.record(cj.dfc_dx.get(i, j), fd[i]);
        }
        let fc_j_a = |av: &[f64]| -> Result<f64> {
            let a = Action(av.to_vec());
            let (f_next, cost) = env.step(&s.x, &a)?;
            let (clipped, _) = clipped_transition(&s.x, &f_next, cost, plane)?;
            Ok(clipped[j])
        };
        let fd = central_diff(fc_j_a, s.a.as_slice(), eps)?;
        for i in 0..m {
            report.record(cj.dfc_da.get(i, j), fd[i]);
        }
    }

    let uc_of_x = |xs: &[f64]| -> Result<f64> {
        let x = State(xs.to_vec());
        let (f_next, cost) = env.step(&x, &s.a)?;
        Ok(clipped_transition(&x, &f_next, cost, plane)?.1)
    };
    let fd = central_diff(uc_of_x, s.x.as_slice(), eps)?;
    for i in 0..n {
        report.record(cj.duc_dx[i], fd[i]);
    }
    let uc_of_a = |av: &[f64]| -> Result<f64> {
        let a = Action(av.to_vec());
        let (f_next, cost) = env.step(&s.x, &a)?;
        Ok(clipped_transition(&s.x, &f_next, cost, plane)?.1)
    };
    let fd = central_diff(uc_of_a, s.a.as_slice(), eps)?;
    for i in 0..m {
        report.record(cj.duc_da[i], fd[i]);
    }

    // Final-step Q-function: U^C + γ^λ φ(f^C), everything re-evaluated.
    let q_of = |x: &State, a: &Action| -> Result<f64> {
        let (f_next, cost) = env.step(x, a)?;
        let lambda = clipping_fraction(x, &f_next, plane)?;
        let (clipped, uc) = clipped_transition(x, &f_next, cost, plane)?;
        let (phi, _) = env.terminal_cost(&clipped);
        Ok(uc + gamma_pow(gamma, lambda) * phi)
    };
    let fd = central_diff(
        |xs| q_of(&State(xs.to_vec()), &s.a),
        s.x.as_slice(),
        eps,
    )?;
    for i in 0..n {
        report.record(q.q_x[i], fd[i]);
    }
    let fd = central_diff(
        |av| q_of(&s.x, &Action(av.to_vec())),
        s.a.as_slice(),
        eps,
    )?;
    for i in 0..m {
        report.record(q.q_u[i], fd[i]);
    }
    Ok(())
}

/// Verify the clipped-function derivatives on `n_samples` random crossing
/// transitions of the environment.
pub fn check_clipping_derivatives(
    env: &dyn Environment,
    gamma: f64,
    n_samples: usize,
    eps: f64,
    tol: f64,
    rng: &mut ChaCha8Rng,
) -> Result<CheckReport> {
    let mut report = CheckReport::new(format!("clip-derivatives/{}", env.name()), tol);
    let mut done = 0;
    while done < n_samples {
        let s = sample_crossing(env, rng, 100_000)?;
        let jac = env.jacobians(&s.x, &s.a);
        let v: Vec<f64> = s
            .f_next
            .as_slice()
            .iter()
            .zip(s.x.as_slice())
            .map(|(f, x)| f - x)
            .collect();
        let cj = clipped_jacobians(&s.x, &v, s.cost, &jac, &s.plane, s.lambda)?;
        let (clipped, _) = clipped_transition(&s.x, &s.f_next, s.cost, &s.plane)?;
        let (phi, dphi_dx) = env.terminal_cost(&clipped);
        let q = clipped_q_gradients(&cj, phi, &dphi_dx, gamma, s.lambda);
        match clipped_derivative_errors(env, gamma, &s, &cj, &q, eps, &mut report) {
            Ok(()) => done += 1,
            Err(_) => report.skipped += 1,
        }
        if report.skipped > 10 * n_samples {
            return Err(Error::SamplingFailed {
                tries: report.skipped,
            });
        }
    }
    Ok(report.finish(n_samples))
}

/// Verify the analytic model Jacobians (and the terminal-cost gradient)
/// against central differences along random walks.
pub fn check_model_jacobians(
    env: &dyn Environment,
    n_samples: usize,
    eps: f64,
    tol: f64,
    rng: &mut ChaCha8Rng,
) -> Result<CheckReport> {
    let mut report = CheckReport::new(format!("model-jacobians/{}", env.name()), tol);
    let n = env.state_dim();
    let m = env.action_dim();
    let mut x = env.sample_start(rng);
    for _ in 0..n_samples {
        let a = env.sample_action(rng);
        let jac = env.jacobians(&x, &a);
        for j in 0..n {
            let fd = central_diff(
                |xs| Ok(env.step(&State(xs.to_vec()), &a)?.0[j]),
                x.as_slice(),
                eps,
            )?;
            for i in 0..n {
                report.record(jac.df_dx.get(i, j), fd[i]);
            }
            let fd = central_diff(
                |av| Ok(env.step(&x, &Action(av.to_vec()))?.0[j]),
                a.as_slice(),
                eps,
            )?;
            for i in 0..m {
                report.record(jac.df_da.get(i, j), fd[i]);
            }
        }
        let fd = central_diff(|xs| Ok(env.step(&State(xs.to_vec()), &a)?.1), x.as_slice(), eps)?;
        for i in 0..n {
            report.record(jac.du_dx[i], fd[i]);
        }
        let fd = central_diff(|av| Ok(env.step(&x, &Action(av.to_vec()))?.1), a.as_slice(), eps)?;
        for i in 0..m {
            report.record(jac.du_da[i], fd[i]);
        }
        // Terminal-cost gradient at the same point (φ is defined everywhere).
        let (_, dphi) = env.terminal_cost(&x);
        let fd = central_diff(|xs| Ok(env.terminal_cost(&State(xs.to_vec())).0), x.as_slice(), eps)?;
        for i in 0..n {
            report.record(dphi[i], fd[i]);
        }

        let (next, _) = env.step(&x, &a)?;
        x = if env.is_terminal(&next) {
            env.sample_start(rng)
        } else {
            next
        };
    }
    Ok(report.finish(n_samples))
}

/// Verify the full BPTT gradient `∂J^C/∂z` against per-weight central
/// differences of the unrolled clipped return. Perturbations that change
/// the trajectory's discrete structure (episode length or crossed plane)
/// are skipped: the return is not differentiable there.
pub fn check_bptt(
    env: &dyn Environment,
    gamma: f64,
    clip_enabled: bool,
    n_inits: usize,
    eps: f64,
    tol: f64,
    rng: &mut ChaCha8Rng,
) -> Result<CheckReport> {
    let clip_tag = if clip_enabled { "" } else { "-noclip" };
    let mut report = CheckReport::new(format!("bptt-gradient{clip_tag}/{}", env.name()), tol);
    let max_steps = env.max_steps();
    for _ in 0..n_inits {
        let actor = Actor::init(env, rng);
        let x0 = env.sample_start(rng);
        let base = unroll(env, &actor, &x0, gamma, clip_enabled, max_steps, 0.0, rng)?;
        let signature = base.signature();
        let analytic = crate::algo::bptt_gradient(&base, env, &actor, gamma)?;

        let mut probe = actor.clone();
        for i in 0..actor.net.num_weights() {
            let w0 = actor.net.weights()[i];
            probe.net.weights_mut()[i] = w0 + eps;
            let plus = unroll(env, &probe, &x0, gamma, clip_enabled, max_steps, 0.0, rng);
            probe.net.weights_mut()[i] = w0 - eps;
            let minus = unroll(env, &probe, &x0, gamma, clip_enabled, max_steps, 0.0, rng);
            probe.net.weights_mut()[i] = w0;
            match (plus, minus) {
                (Ok(p), Ok(m)) if p.signature() == signature && m.signature() == signature => {
                    let fd = (p.return_value - m.return_value) / (2.0 * eps);
                    report.record(analytic[i], fd);
                }
                _ => report.skipped += 1,
            }
        }
    }
    // A full weight vector per init; skipped entries are non-differentiable
    // points, not failures.
    Ok(report.finish(n_inits))
}

/// Verify MLP weight gradients against central differences on random nets.
pub fn check_mlp_weight_gradients(
    n_nets: usize,
    eps: f64,
    tol: f64,
    rng: &mut ChaCha8Rng,
) -> CheckReport {
    let mut report = CheckReport::new("mlp-weight-gradients", tol);
    for k in 0..n_nets {
        let (net, x, c) = random_net(k, rng);
        let analytic = net.grad_weights(&x, &c);
        for i in 0..net.num_weights() {
            let mut plus = net.clone();
            plus.weights_mut()[i] += eps;
            let mut minus = net.clone();
            minus.weights_mut()[i] -= eps;
            let fp: f64 = plus.forward(&x).iter().zip(&c).map(|(y, ci)| y * ci).sum();
            let fm: f64 = minus.forward(&x).iter().zip(&c).map(|(y, ci)| y * ci).sum();
            report.record(analytic[i], (fp - fm) / (2.0 * eps));
        }
    }
    report.finish(n_nets)
}

/// Verify MLP input gradients against central differences on random nets.
pub fn check_mlp_input_gradients(
    n_nets: usize,
    eps: f64,
    tol: f64,
    rng: &mut ChaCha8Rng,
) -> CheckReport {
    let mut report = CheckReport::new("mlp-input-gradients", tol);
    for k in 0..n_nets {
        let (net, x, c) = random_net(k, rng);
        let analytic = net.grad_input(&x, &c);
        let scalar = |xs: &[f64]| -> Result<f64> {
            Ok(net.forward(xs).iter().zip(&c).map(|(y, ci)| y * ci).sum())
        };
        let fd = central_diff(scalar, &x, eps).expect("mlp forward is total");
        for i in 0..x.len() {
            report.record(analytic[i], fd[i]);
        }
    }
    report.finish(n_nets)
}

fn random_net(k: usize, rng: &mut ChaCha8Rng) -> (MlpNet, Vec<f64>, Vec<f64>) {
    let n_in = 2 + k % 3;
    let n_out = 1 + k % 4;
    let output = if k % 2 == 0 {
        OutputActivation::Tanh
    } else {
        OutputActivation::Linear {
            slope: [20.0, 10.0, 0.1][k % 3],
        }
    };
    let net = MlpNet::init(n_in, n_out, output, rng);
    let x: Vec<f64> = (0..n_in).map(|_| rng.gen_range(-1.5..1.5)).collect();
    let c: Vec<f64> = (0..n_out).map(|_| rng.gen_range(-1.0..1.0)).collect();
    (net, x, c)
}


#[cfg(test)]
mod degenerate_tests {
    use super::*;
    use crate::envs::{CartPole, Lander};
    use crate::linalg::dot;
    use rand::SeedableRng;

    /// Without clipping the cart-pole return is piecewise constant in the
    /// weights: the analytic gradient is exactly zero and the numeric one is
    /// zero almost everywhere, so the check passes in this degenerate sense.
    #[test]
    fn cartpole_without_clipping_agrees_degenerately() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let report =
            check_bptt(&CartPole::default(), 0.97, false, 3, 1e-5, 1e-4, &mut rng).unwrap();
        assert!(report.pass, "{report}");
        assert_eq!(report.max_rel_err, 0.0, "{report}");
    }

    /// The clipped lander model maps any input perturbation onto the
    /// crossed plane (the endpoint cannot leave the boundary).
    #[test]
    fn lander_clipped_jacobian_preserves_the_plane() {
        let env = Lander::default();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..20 {
            let s = sample_crossing(&env, &mut rng, 100_000).unwrap();
            let jac = env.jacobians(&s.x, &s.a);
            let v: Vec<f64> = s
                .f_next
                .as_slice()
                .iter()
                .zip(s.x.as_slice())
                .map(|(f, x)| f - x)
                .collect();
            let cj = clipped_jacobians(&s.x, &v, s.cost, &jac, &s.plane, s.lambda).unwrap();
            for dir in [
                vec![1.0, 0.0, 0.0],
                vec![0.0, 1.0, 0.0],
                vec![0.0, 0.0, 1.0],
                vec![0.3, -0.4, 0.8],
            ] {
                let moved = cj.dfc_dx.pushforward(&dir);
                assert!(
                    dot(&moved, &s.plane.normal).abs() <= 1e-9,
                    "plane-normal leak {:?}",
                    dot(&moved, &s.plane.normal)
                );
            }
        }
    }
}

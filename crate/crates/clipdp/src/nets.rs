//! Actor and critic networks bound to an environment's scaling.
//!
//! The MLPs only ever see scaled state vectors, and the action network's raw
//! output is rescaled into the environment's action units. Both maps are
//! part of the differentiated function: every `∂A/∂z`, `∂A/∂x`, `∂G̃/∂w`,
//! `∂Ṽ/∂x` product here carries the scaling Jacobians through the chain
//! rule, so the learning algorithms can work entirely in raw state space.

use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::env::{Action, Environment, NetIo, State};
use crate::mlp::{MlpNet, OutputActivation};

/// Action network: tanh output, rescaled per environment.
#[derive(Debug, Clone)]
pub struct Actor {
    pub net: MlpNet,
    io: NetIo,
    state_dim: usize,
}

impl Actor {
    pub fn init(env: &dyn Environment, rng: &mut ChaCha8Rng) -> Self {
        let io = env.net_io();
        let net = MlpNet::init(io.net_in_dim(), io.action_dim(), OutputActivation::Tanh, rng);
        Actor {
            net,
            io,
            state_dim: env.state_dim(),
        }
    }

    pub fn from_net(net: MlpNet, env: &dyn Environment) -> Self {
        let io = env.net_io();
        assert_eq!(net.n_in(), io.net_in_dim());
        assert_eq!(net.n_out(), io.action_dim());
        Actor {
            net,
            io,
            state_dim: env.state_dim(),
        }
    }

    /// `A(x, z)`: scaled input, network, action rescale.
    pub fn act(&self, x: &State) -> Action {
        let y = self.net.forward(&self.io.scale_state(x));
        self.io.rescale_action(&y)
    }

    /// `A(x, z)` plus zero-mean Gaussian noise on the rescaled action.
    /// The noisy action is not re-clamped to the action range.
    pub fn act_noisy(&self, x: &State, noise_std: f64, rng: &mut ChaCha8Rng) -> Action {
        let mut a = self.act(x);
        if noise_std > 0.0 {
            let normal = Normal::new(0.0, noise_std).expect("valid std");
            for c in &mut a.0 {
                *c += normal.sample(rng);
            }
        }
        a
    }

    /// `(∂A/∂z)·q_u` and `(∂A/∂x)·q_u` in one reverse pass.
    pub fn pullback(&self, x: &State, q_u: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let mut wgrad = vec![0.0; self.net.num_weights()];
        let state_grad = self.pullback_into(x, q_u, &mut wgrad, 1.0);
        (wgrad, state_grad)
    }

    /// As [`Actor::pullback`], accumulating `scale · (∂A/∂z)·q_u` into an
    /// existing weight-gradient buffer and returning `(∂A/∂x)·q_u`.
    pub fn pullback_into(
        &self,
        x: &State,
        q_u: &[f64],
        wgrad_acc: &mut [f64],
        scale: f64,
    ) -> Vec<f64> {
        let scaled_in = self.io.scale_state(x);
        let cot: Vec<f64> = q_u
            .iter()
            .zip(&self.io.action_slope)
            .map(|(q, s)| q * s)
            .collect();
        let in_grad = self.net.grad_into(&scaled_in, &cot, wgrad_acc, scale);
        self.io.embed_gradient(self.state_dim, &in_grad)
    }

    pub fn pullback_weights(&self, x: &State, q_u: &[f64]) -> Vec<f64> {
        self.pullback(x, q_u).0
    }

    pub fn pullback_state(&self, x: &State, q_u: &[f64]) -> Vec<f64> {
        self.pullback(x, q_u).1
    }
}

/// DHP critic: one output per scaled state component, approximating the
/// cost-to-go gradient in scaled coordinates.
///
/// The output slope multiplies a unit-slope linear network on the way out;
/// training errors are expressed in the network's own units (divided by the
/// slope once). The slope therefore sets the critic's output range without
/// entering the effective learning rate, so one critic learning rate means
/// the same thing at slope 20 and slope 0.1.
#[derive(Debug, Clone)]
pub struct VectorCritic {
    pub net: MlpNet,
    pub slope: f64,
    io: NetIo,
    state_dim: usize,
}

impl VectorCritic {
    pub fn init(env: &dyn Environment, slope: f64, rng: &mut ChaCha8Rng) -> Self {
        assert!(slope != 0.0);
        let io = env.net_io();
        let net = MlpNet::init(
            io.net_in_dim(),
            io.net_in_dim(),
            OutputActivation::Linear { slope: 1.0 },
            rng,
        );
        VectorCritic {
            net,
            slope,
            io,
            state_dim: env.state_dim(),
        }
    }

    /// Critic output `G̃(x')` in scaled coordinates (slope applied).
    pub fn output(&self, x: &State) -> Vec<f64> {
        let mut out = self.net.forward(&self.io.scale_state(x));
        for v in &mut out {
            *v *= self.slope;
        }
        out
    }

    /// Critic estimate of `∂J/∂x` in raw state coordinates. Components the
    /// network does not see (e.g. the step counter) come back zero.
    pub fn p_vector(&self, x: &State) -> Vec<f64> {
        self.io
            .embed_gradient(self.state_dim, &self.output(x))
    }

    /// Convert a raw-space gradient target into the critic's output space.
    pub fn project_target(&self, target_raw: &[f64]) -> Vec<f64> {
        self.io.project_gradient(target_raw)
    }

    /// Weight gradient moving the critic output toward `output + err`,
    /// with `err` in the critic's (scaled, slope-applied) output units.
    pub fn weight_update(&self, x: &State, err: &[f64]) -> Vec<f64> {
        let normalized: Vec<f64> = err.iter().map(|e| e / self.slope).collect();
        self.net
            .grad_weights(&self.io.scale_state(x), &normalized)
    }
}

/// HDP critic: scalar cost-to-go estimate. Slope semantics as for
/// [`VectorCritic`].
#[derive(Debug, Clone)]
pub struct ScalarCritic {
    pub net: MlpNet,
    pub slope: f64,
    io: NetIo,
    state_dim: usize,
}

impl ScalarCritic {
    pub fn init(env: &dyn Environment, slope: f64, rng: &mut ChaCha8Rng) -> Self {
        assert!(slope != 0.0);
        let io = env.net_io();
        let net = MlpNet::init(
            io.net_in_dim(),
            1,
            OutputActivation::Linear { slope: 1.0 },
            rng,
        );
        ScalarCritic {
            net,
            slope,
            io,
            state_dim: env.state_dim(),
        }
    }

    pub fn value(&self, x: &State) -> f64 {
        self.slope * self.net.forward(&self.io.scale_state(x))[0]
    }

    /// `∂Ṽ/∂x` in raw state coordinates.
    pub fn grad_x(&self, x: &State) -> Vec<f64> {
        let g = self.net.grad_input(&self.io.scale_state(x), &[self.slope]);
        self.io.embed_gradient(self.state_dim, &g)
    }

    /// Weight gradient moving the value estimate toward `value + err`,
    /// with `err` in cost units.
    pub fn weight_update(&self, x: &State, err: f64) -> Vec<f64> {
        self.net
            .grad_weights(&self.io.scale_state(x), &[err / self.slope])
    }
}

/// Start-state batch of the experiment protocol: fixed start points drawn
/// once per trial.
pub fn draw_start_batch(
    env: &dyn Environment,
    count: usize,
    rng: &mut ChaCha8Rng,
) -> Vec<State> {
    (0..count).map(|_| env.sample_start(rng)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::dot;

    struct Dummy;

    impl Environment for Dummy {
        fn name(&self) -> &'static str {
            "dummy"
        }
        fn state_dim(&self) -> usize {
            3
        }
        fn action_dim(&self) -> usize {
            1
        }
        fn step(&self, _x: &State, _a: &Action) -> crate::error::Result<(State, f64)> {
            unimplemented!()
        }
        fn jacobians(&self, _x: &State, _a: &Action) -> crate::env::ModelJacobians {
            unimplemented!()
        }
        fn is_terminal(&self, _x: &State) -> bool {
            false
        }
        fn terminal_cost(&self, _x: &State) -> (f64, Vec<f64>) {
            (0.0, vec![0.0; 3])
        }
        fn boundary_query(&self, _f: &State, _t: &State) -> crate::error::Result<crate::env::Plane> {
            unimplemented!()
        }
        fn net_io(&self) -> NetIo {
            NetIo {
                input_map: vec![(0, 0.5), (2, 2.0)],
                action_offset: vec![0.5],
                action_slope: vec![0.5],
            }
        }
        fn max_steps(&self) -> usize {
            10
        }
        fn sample_start(&self, _rng: &mut ChaCha8Rng) -> State {
            State(vec![0.0; 3])
        }
        fn sample_action(&self, _rng: &mut ChaCha8Rng) -> Action {
            Action(vec![0.0])
        }
    }

    #[test]
    fn zero_weight_actor_outputs_rescale_offset() {
        use rand::SeedableRng;
        let env = Dummy;
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut actor = Actor::init(&env, &mut rng);
        for w in actor.net.weights_mut() {
            *w = 0.0;
        }
        let a = actor.act(&State(vec![1.0, 2.0, 3.0]));
        assert_eq!(a.as_slice(), &[0.5]);
    }

    /// ∂A/∂x must include the input scaling, the network, and the action
    /// slope; check against central differences of the whole chain.
    #[test]
    fn actor_state_pullback_matches_finite_differences() {
        use rand::SeedableRng;
        let env = Dummy;
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let actor = Actor::init(&env, &mut rng);
        let x = State(vec![0.3, -1.0, 0.8]);
        let q_u = vec![0.7];
        let g = actor.pullback_state(&x, &q_u);
        let eps = 1e-6;
        for i in 0..3 {
            let mut xp = x.clone();
            xp.0[i] += eps;
            let mut xm = x.clone();
            xm.0[i] -= eps;
            let fp = dot(actor.act(&xp).as_slice(), &q_u);
            let fm = dot(actor.act(&xm).as_slice(), &q_u);
            let fd = (fp - fm) / (2.0 * eps);
            assert!((g[i] - fd).abs() < 1e-8, "component {i}: {} vs {fd}", g[i]);
        }
        // Component 1 is not a network input, so the gradient there is zero.
        assert_eq!(g[1], 0.0);
    }

    #[test]
    fn vector_critic_roundtrip_projection() {
        use rand::SeedableRng;
        let env = Dummy;
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let critic = VectorCritic::init(&env, 20.0, &mut rng);
        let x = State(vec![0.2, 9.0, -0.4]);
        let p = critic.p_vector(&x);
        let back = critic.project_target(&p);
        let out = critic.output(&x);
        for (a, b) in back.iter().zip(&out) {
            assert!((a - b).abs() < 1e-12);
        }
        // The unseen component stays zero in the raw-space estimate.
        assert_eq!(p[1], 0.0);
    }

    #[test]
    fn scalar_critic_gradient_matches_finite_differences() {
        use rand::SeedableRng;
        let env = Dummy;
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let critic = ScalarCritic::init(&env, 10.0, &mut rng);
        let x = State(vec![0.1, 4.0, -0.2]);
        let g = critic.grad_x(&x);
        let eps = 1e-6;
        for i in [0usize, 2] {
            let mut xp = x.clone();
            xp.0[i] += eps;
            let mut xm = x.clone();
            xm.0[i] -= eps;
            let fd = (critic.value(&xp) - critic.value(&xm)) / (2.0 * eps);
            assert!((g[i] - fd).abs() < 1e-7);
        }
        assert_eq!(g[1], 0.0);
    }
}

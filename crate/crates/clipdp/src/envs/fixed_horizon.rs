//! Synthetic fixed-horizon environment.
//!
//! A one-dimensional integrator `w' = w + a` with smooth quadratic costs,
//! terminated after exactly `k` steps by a counter plane. Because the
//! counter advances by exactly one per step, the clipping fraction is
//! always exactly 1, and the clipped and unclipped learning gradients must
//! agree exactly — fixed-length problems need no clipping. The actor only
//! sees `w`, never the counter, which keeps the counter component inert in
//! every gradient product.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::env::{Action, Environment, ModelJacobians, NetIo, Plane, State};
use crate::error::Result;
use crate::linalg::Jacobian;

#[derive(Debug, Clone)]
pub struct FixedHorizon {
    pub horizon: usize,
    /// Network-input scale for `w`; exercises the scaling chain rules.
    pub input_scale: f64,
}

impl FixedHorizon {
    pub fn new(horizon: usize) -> Self {
        assert!(horizon >= 1);
        FixedHorizon {
            horizon,
            input_scale: 1.0,
        }
    }

    pub fn with_input_scale(horizon: usize, input_scale: f64) -> Self {
        assert!(input_scale != 0.0);
        FixedHorizon {
            horizon,
            input_scale,
        }
    }

    fn counter_plane(&self) -> Plane {
        Plane::new(
            vec![0.0, self.horizon as f64],
            vec![0.0, 1.0],
            "horizon",
        )
    }
}

impl Environment for FixedHorizon {
    fn name(&self) -> &'static str {
        "fixed-horizon"
    }

    fn state_dim(&self) -> usize {
        2
    }

    fn action_dim(&self) -> usize {
        1
    }

    fn step(&self, x: &State, a: &Action) -> Result<(State, f64)> {
        let w = x[0];
        let next = State(vec![w + a[0], x[1] + 1.0]);
        Ok((next, w * w + 0.1 * a[0] * a[0]))
    }

    fn jacobians(&self, x: &State, a: &Action) -> ModelJacobians {
        ModelJacobians {
            df_dx: Jacobian::from_rows(&[&[1.0, 0.0], &[0.0, 1.0]]),
            df_da: Jacobian::from_rows(&[&[1.0, 0.0]]),
            du_dx: vec![2.0 * x[0], 0.0],
            du_da: vec![0.2 * a[0]],
        }
    }

    fn is_terminal(&self, x: &State) -> bool {
        x[1] >= self.horizon as f64
    }

    fn terminal_cost(&self, x: &State) -> (f64, Vec<f64>) {
        (2.0 * x[0] * x[0], vec![4.0 * x[0], 0.0])
    }

    fn boundary_query(&self, _x_from: &State, _x_to: &State) -> Result<Plane> {
        Ok(self.counter_plane())
    }

    fn net_io(&self) -> NetIo {
        NetIo {
            input_map: vec![(0, self.input_scale)],
            action_offset: vec![0.0],
            action_slope: vec![1.0],
        }
    }

    fn max_steps(&self) -> usize {
        self.horizon + 1
    }

    fn sample_start(&self, rng: &mut ChaCha8Rng) -> State {
        State(vec![rng.gen_range(-1.0..1.0), 0.0])
    }

    fn sample_action(&self, rng: &mut ChaCha8Rng) -> Action {
        Action(vec![rng.gen_range(-1.0..1.0)])
    }
}

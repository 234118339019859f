//! Frictionless cart-pole with a duration-based cost.
//!
//! State `(x, θ, ẋ, θ̇, t)`: cart position, pole angle, their time
//! derivatives, and the step counter (the counter is part of the state so
//! the 300-step success horizon is an ordinary terminal plane). Euler
//! integration with `Δt = 0.02 s`:
//!
//! ```text
//! θ̈ = ( g·sinθ − cosθ·(F + m·l·θ̇²·sinθ)/(m_c+m) ) / ( l·(4/3 − m·cos²θ/(m_c+m)) )
//! ẍ = ( F + m·l·(θ̇²·sinθ − θ̈·cosθ) ) / (m_c+m)
//! ```
//!
//! Failure is `|x| ≥ 2.4` or `|θ| ≥ π/15`; balancing for 300 steps ends the
//! episode through the time plane. Cost is purely duration based: every
//! step cost is zero and termination delivers a unit impulse discounted by
//! `γ^λ` over the clipped final step, so a trajectory of (fractional)
//! duration `T` costs exactly `γ^T`. Minimising the return maximises the
//! balancing time. All the cost derivatives vanish identically, which is
//! what makes this problem unsolvable for model-gradient methods without
//! clipping: the only learning signal flows through the clipping fraction.

use std::f64::consts::PI;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::env::{
    first_crossed_plane, Action, Environment, ModelJacobians, NetIo, Plane, State,
};
use crate::error::Result;
use crate::linalg::Jacobian;

#[derive(Debug, Clone)]
pub struct CartPoleParams {
    pub gravity: f64,
    pub cart_mass: f64,
    pub pole_mass: f64,
    /// Half pole length.
    pub pole_length: f64,
    pub force_mag: f64,
    pub dt: f64,
    pub angle_limit: f64,
    pub track_limit: f64,
    /// Success horizon in steps.
    pub horizon: f64,
}

impl Default for CartPoleParams {
    fn default() -> Self {
        CartPoleParams {
            gravity: 9.8,
            cart_mass: 1.0,
            pole_mass: 0.1,
            pole_length: 0.5,
            force_mag: 10.0,
            dt: 0.02,
            angle_limit: PI / 15.0,
            track_limit: 2.4,
            horizon: 300.0,
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct CartPole {
    pub params: CartPoleParams,
}

/// Accelerations and their partial derivatives at `(θ, θ̇, F)`.
struct Accel {
    theta_dd: f64,
    x_dd: f64,
    dtheta_dd: [f64; 3], // by θ, θ̇, F
    dx_dd: [f64; 3],
}

impl CartPole {
    pub fn new(params: CartPoleParams) -> Self {
        CartPole { params }
    }

    fn accel(&self, theta: f64, theta_dot: f64, force: f64) -> Accel {
        let p = &self.params;
        let total_mass = p.cart_mass + p.pole_mass;
        let ml = p.pole_mass * p.pole_length;
        let (sin, cos) = theta.sin_cos();

        let tmp = (force + ml * theta_dot * theta_dot * sin) / total_mass;
        let num = p.gravity * sin - cos * tmp;
        let den = p.pole_length * (4.0 / 3.0 - p.pole_mass * cos * cos / total_mass);
        let theta_dd = num / den;

        let dtmp_dtheta = ml * theta_dot * theta_dot * cos / total_mass;
        let dtmp_dthetadot = 2.0 * ml * theta_dot * sin / total_mass;
        let dnum_dtheta = p.gravity * cos + sin * tmp - cos * dtmp_dtheta;
        let dnum_dthetadot = -cos * dtmp_dthetadot;
        let dnum_dforce = -cos / total_mass;
        let dden_dtheta = 2.0 * p.pole_length * p.pole_mass * sin * cos / total_mass;

        let dtheta_dd = [
            (dnum_dtheta * den - num * dden_dtheta) / (den * den),
            dnum_dthetadot / den,
            dnum_dforce / den,
        ];

        let x_dd = (force + ml * (theta_dot * theta_dot * sin - theta_dd * cos)) / total_mass;
        let dx_dd = [
            ml * (theta_dot * theta_dot * cos - dtheta_dd[0] * cos + theta_dd * sin) / total_mass,
            ml * (2.0 * theta_dot * sin - cos * dtheta_dd[1]) / total_mass,
            (1.0 - ml * cos * dtheta_dd[2]) / total_mass,
        ];

        Accel {
            theta_dd,
            x_dd,
            dtheta_dd,
            dx_dd,
        }
    }

    fn planes(&self) -> [Plane; 5] {
        let p = &self.params;
        let z = || vec![0.0; 5];
        let mut theta_hi = z();
        theta_hi[1] = p.angle_limit;
        let mut theta_lo = z();
        theta_lo[1] = -p.angle_limit;
        let mut x_hi = z();
        x_hi[0] = p.track_limit;
        let mut x_lo = z();
        x_lo[0] = -p.track_limit;
        let mut t_plane = z();
        t_plane[4] = p.horizon;
        [
            Plane::new(theta_hi, vec![0.0, -1.0, 0.0, 0.0, 0.0], "theta+"),
            Plane::new(theta_lo, vec![0.0, 1.0, 0.0, 0.0, 0.0], "theta-"),
            Plane::new(x_hi, vec![-1.0, 0.0, 0.0, 0.0, 0.0], "x+"),
            Plane::new(x_lo, vec![1.0, 0.0, 0.0, 0.0, 0.0], "x-"),
            Plane::new(t_plane, vec![0.0, 0.0, 0.0, 0.0, 1.0], "time"),
        ]
    }
}

impl Environment for CartPole {
    fn name(&self) -> &'static str {
        "cartpole"
    }

    fn state_dim(&self) -> usize {
        5
    }

    fn action_dim(&self) -> usize {
        1
    }

    fn step(&self, x: &State, a: &Action) -> Result<(State, f64)> {
        let p = &self.params;
        let acc = self.accel(x[1], x[3], a[0]);
        let next = State(vec![
            x[0] + x[2] * p.dt,
            x[1] + x[3] * p.dt,
            x[2] + acc.x_dd * p.dt,
            x[3] + acc.theta_dd * p.dt,
            x[4] + 1.0,
        ]);
        Ok((next, 0.0))
    }

    fn jacobians(&self, x: &State, a: &Action) -> ModelJacobians {
        let p = &self.params;
        let acc = self.accel(x[1], x[3], a[0]);
        let mut df_dx = Jacobian::zeros(5, 5);
        // Position block: x' = x + ẋΔt, θ' = θ + θ̇Δt.
        df_dx.set(0, 0, 1.0);
        df_dx.set(2, 0, p.dt);
        df_dx.set(1, 1, 1.0);
        df_dx.set(3, 1, p.dt);
        // Velocity block through the accelerations.
        df_dx.set(2, 2, 1.0);
        df_dx.set(1, 2, p.dt * acc.dx_dd[0]);
        df_dx.set(3, 2, p.dt * acc.dx_dd[1]);
        df_dx.set(3, 3, 1.0 + p.dt * acc.dtheta_dd[1]);
        df_dx.set(1, 3, p.dt * acc.dtheta_dd[0]);
        // Step counter advances by exactly one.
        df_dx.set(4, 4, 1.0);

        let mut df_da = Jacobian::zeros(1, 5);
        df_da.set(0, 2, p.dt * acc.dx_dd[2]);
        df_da.set(0, 3, p.dt * acc.dtheta_dd[2]);

        ModelJacobians {
            df_dx,
            df_da,
            du_dx: vec![0.0; 5],
            du_da: vec![0.0],
        }
    }

    fn is_terminal(&self, x: &State) -> bool {
        let p = &self.params;
        x[0].abs() >= p.track_limit || x[1].abs() >= p.angle_limit || x[4] >= p.horizon
    }

    /// Unit impulse at every termination; the duration-based cost is carried
    /// entirely by the `γ^λ` discounting of this impulse.
    fn terminal_cost(&self, _x: &State) -> (f64, Vec<f64>) {
        (1.0, vec![0.0; 5])
    }

    fn boundary_query(&self, x_from: &State, x_to: &State) -> Result<Plane> {
        first_crossed_plane(x_from, x_to, &self.planes())
    }

    fn net_io(&self) -> NetIo {
        NetIo {
            input_map: vec![(0, 0.16), (1, 15.0 / PI), (2, 1.0), (3, 4.0)],
            action_offset: vec![0.0],
            action_slope: vec![self.params.force_mag],
        }
    }

    fn max_steps(&self) -> usize {
        self.params.horizon as usize + 1
    }

    fn sample_start(&self, rng: &mut ChaCha8Rng) -> State {
        let p = &self.params;
        loop {
            let s = State(vec![
                rng.gen_range(-p.track_limit..p.track_limit),
                rng.gen_range(-p.angle_limit..p.angle_limit),
                0.0,
                0.0,
                0.0,
            ]);
            if !self.is_terminal(&s) {
                return s;
            }
        }
    }

    fn sample_action(&self, rng: &mut ChaCha8Rng) -> Action {
        Action(vec![rng.gen_range(-self.params.force_mag..self.params.force_mag)])
    }
}

//! Vertical lander: a spacecraft falling in a uniform gravitational field,
//! with a single thruster and a fuel budget, aiming for a gentle landing.
//!
//! State `(h, v, u)`: height, vertical velocity, fuel remaining. The action
//! is the thruster acceleration, nominally in [0, 1]. Euler integration
//! with step `Δt`:
//!
//! ```text
//! f((h, v, u), a) = (h + vΔt, v + (a − k_g)Δt, k_u·u − aΔt)
//! U((h, v, u), a) = k_f · a · Δt
//! φ(h, v, u)      = ½·m·v² + m·k_g·h        (kinetic + potential energy)
//! ```
//!
//! Trajectories terminate on hitting the ground (`h ≤ 0`) or running out of
//! fuel (`u ≤ 0`); both boundaries are exact planes.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::env::{
    first_crossed_plane, Action, Environment, ModelJacobians, NetIo, Plane, State,
};
use crate::error::{Error, Result};
use crate::linalg::Jacobian;

/// Sanity range for post-noise actions; the model is smooth in `a`, this
/// only guards against runaway weights.
const ACTION_SANITY: f64 = 10.0;

#[derive(Debug, Clone)]
pub struct LanderParams {
    /// Gravitational acceleration per step².
    pub k_g: f64,
    /// Fuel penalty coefficient.
    pub k_f: f64,
    /// Fuel unit conversion.
    pub k_u: f64,
    /// Spacecraft mass (terminal cost only).
    pub m: f64,
    pub dt: f64,
    pub max_steps: usize,
}

impl Default for LanderParams {
    fn default() -> Self {
        Self::with_dt(1.0)
    }
}

impl LanderParams {
    /// Standard constants with a chosen integration step. The step cap
    /// scales with 1/Δt so that finer sampling does not truncate legitimate
    /// episodes (a hovering policy can stay airborne for ~15000 steps at
    /// Δt = 0.01 before exhausting fuel).
    pub fn with_dt(dt: f64) -> Self {
        assert!(dt > 0.0);
        LanderParams {
            k_g: 0.2,
            k_f: 4.0,
            k_u: 1.0,
            m: 2.0,
            dt,
            max_steps: (1000.0 / dt).ceil() as usize,
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct Lander {
    pub params: LanderParams,
}

impl Lander {
    pub fn new(params: LanderParams) -> Self {
        Lander { params }
    }

    fn ground_plane() -> Plane {
        Plane::new(vec![0.0; 3], vec![1.0, 0.0, 0.0], "ground")
    }

    fn fuel_plane() -> Plane {
        Plane::new(vec![0.0; 3], vec![0.0, 0.0, 1.0], "fuel")
    }
}

impl Environment for Lander {
    fn name(&self) -> &'static str {
        "lander"
    }

    fn state_dim(&self) -> usize {
        3
    }

    fn action_dim(&self) -> usize {
        1
    }

    fn step(&self, x: &State, a: &Action) -> Result<(State, f64)> {
        let p = &self.params;
        let thrust = a[0];
        if !(-ACTION_SANITY..=ACTION_SANITY).contains(&thrust) {
            return Err(Error::ActionOutOfRange {
                value: thrust,
                lo: -ACTION_SANITY,
                hi: ACTION_SANITY,
            });
        }
        let (h, v, u) = (x[0], x[1], x[2]);
        let next = State(vec![
            h + v * p.dt,
            v + (thrust - p.k_g) * p.dt,
            p.k_u * u - thrust * p.dt,
        ]);
        Ok((next, p.k_f * thrust * p.dt))
    }

    fn jacobians(&self, _x: &State, _a: &Action) -> ModelJacobians {
        let p = &self.params;
        ModelJacobians {
            df_dx: Jacobian::from_rows(&[
                &[1.0, 0.0, 0.0],
                &[p.dt, 1.0, 0.0],
                &[0.0, 0.0, p.k_u],
            ]),
            df_da: Jacobian::from_rows(&[&[0.0, p.dt, -p.dt]]),
            du_dx: vec![0.0; 3],
            du_da: vec![p.k_f * p.dt],
        }
    }

    fn is_terminal(&self, x: &State) -> bool {
        x[0] <= 0.0 || x[2] <= 0.0
    }

    fn terminal_cost(&self, x: &State) -> (f64, Vec<f64>) {
        let p = &self.params;
        let phi = 0.5 * p.m * x[1] * x[1] + p.m * p.k_g * x[0];
        (phi, vec![p.m * p.k_g, p.m * x[1], 0.0])
    }

    fn boundary_query(&self, x_from: &State, x_to: &State) -> Result<Plane> {
        first_crossed_plane(x_from, x_to, &[Self::ground_plane(), Self::fuel_plane()])
    }

    fn net_io(&self) -> NetIo {
        NetIo {
            input_map: vec![(0, 1.0 / 100.0), (1, 1.0 / 10.0), (2, 1.0 / 50.0)],
            action_offset: vec![0.5],
            action_slope: vec![0.5],
        }
    }

    fn max_steps(&self) -> usize {
        self.params.max_steps
    }

    fn sample_start(&self, rng: &mut ChaCha8Rng) -> State {
        loop {
            let s = State(vec![
                rng.gen_range(0.0..100.0),
                rng.gen_range(-10.0..10.0),
                30.0,
            ]);
            if !self.is_terminal(&s) {
                return s;
            }
        }
    }

    fn sample_action(&self, rng: &mut ChaCha8Rng) -> Action {
        Action(vec![rng.gen_range(0.0..1.0)])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    fn lander() -> Lander {
        Lander::default()
    }

    #[test]
    fn step_matches_model_function() {
        let env = lander();
        let (next, cost) = env
            .step(&State(vec![100.0, -10.0, 30.0]), &Action(vec![0.2]))
            .unwrap();
        assert_eq!(next.as_slice(), &[90.0, -10.0, 29.8]);
        assert!((cost - 0.8).abs() < 1e-15);
    }

    #[test]
    fn hover_thrust_leaves_velocity_unchanged() {
        let env = lander();
        let (next, _) = env
            .step(&State(vec![50.0, -3.0, 10.0]), &Action(vec![0.2]))
            .unwrap();
        assert_eq!(next[1], -3.0);
    }

    #[test]
    fn jacobians_match_central_differences() {
        let env = lander();
        let x = State(vec![42.0, -7.5, 12.0]);
        let a = Action(vec![0.35]);
        let jac = env.jacobians(&x, &a);
        let eps = 1e-6;
        for i in 0..3 {
            let mut xp = x.clone();
            xp.0[i] += eps;
            let mut xm = x.clone();
            xm.0[i] -= eps;
            let fp = env.step(&xp, &a).unwrap();
            let fm = env.step(&xm, &a).unwrap();
            for j in 0..3 {
                let fd = (fp.0[j] - fm.0[j]) / (2.0 * eps);
                let rel = (jac.df_dx.get(i, j) - fd).abs() / fd.abs().max(1.0);
                assert!(rel < 1e-8);
            }
            let fd_u = (fp.1 - fm.1) / (2.0 * eps);
            assert!((jac.du_dx[i] - fd_u).abs() < 1e-8);
        }
        let ap = Action(vec![a[0] + eps]);
        let am = Action(vec![a[0] - eps]);
        let fp = env.step(&x, &ap).unwrap();
        let fm = env.step(&x, &am).unwrap();
        for j in 0..3 {
            let fd = (fp.0[j] - fm.0[j]) / (2.0 * eps);
            assert!((jac.df_da.get(0, j) - fd).abs() / fd.abs().max(1.0) < 1e-8);
        }
        assert!((jac.du_da[0] - (fp.1 - fm.1) / (2.0 * eps)).abs() < 1e-7);
    }

    #[test]
    fn terminal_cost_values_and_gradient() {
        let env = lander();
        let (phi, grad) = env.terminal_cost(&State(vec![0.0, -3.0, 5.0]));
        assert_eq!(phi, 9.0);
        assert_eq!(grad, vec![0.4, -6.0, 0.0]);
        let (phi2, _) = env.terminal_cost(&State(vec![10.0, 0.0, 0.0]));
        assert_eq!(phi2, 4.0);

        // Gradient against central differences.
        let x = State(vec![3.0, -2.5, 1.0]);
        let (_, g) = env.terminal_cost(&x);
        let eps = 1e-6;
        for i in 0..3 {
            let mut xp = x.clone();
            xp.0[i] += eps;
            let mut xm = x.clone();
            xm.0[i] -= eps;
            let fd = (env.terminal_cost(&xp).0 - env.terminal_cost(&xm).0) / (2.0 * eps);
            assert!((g[i] - fd).abs() < 1e-8);
        }
    }

    #[test]
    fn boundary_selection() {
        let env = lander();
        // Height crosses zero, fuel stays positive.
        let p = env
            .boundary_query(&State(vec![1.0, -2.0, 5.0]), &State(vec![-1.0, -2.0, 4.5]))
            .unwrap();
        assert_eq!(p.name, "ground");
        // Fuel crosses first.
        let p = env
            .boundary_query(&State(vec![5.0, -1.0, 0.2]), &State(vec![4.0, -1.0, -0.8]))
            .unwrap();
        assert_eq!(p.name, "fuel");
        // Both cross; ground reached at λ = 0.3, fuel at 0.6.
        let p = env
            .boundary_query(
                &State(vec![3.0, -5.0, 0.6]),
                &State(vec![-7.0, -5.0, -0.4]),
            )
            .unwrap();
        assert_eq!(p.name, "ground");
        // Contract violation: nothing crossed.
        let r = env.boundary_query(&State(vec![3.0, -5.0, 6.0]), &State(vec![2.0, -5.0, 5.5]));
        assert!(r.is_err());
    }

    #[test]
    fn action_sanity_guard() {
        let env = lander();
        let r = env.step(&State(vec![10.0, 0.0, 10.0]), &Action(vec![11.0]));
        assert!(matches!(r, Err(Error::ActionOutOfRange { .. })));
    }

    /// Hovering exactly against gravity never descends: termination can only
    /// come from the fuel boundary.
    #[test]
    fn hover_terminates_by_fuel_only() {
        let env = lander();
        let mut x = State(vec![10.0, 5.0, 30.0]);
        let a = Action(vec![0.2]);
        let mut steps = 0;
        while !env.is_terminal(&x) {
            let (next, _) = env.step(&x, &a).unwrap();
            assert!(next[0] >= x[0], "height must not decrease while v >= 0");
            x = next;
            steps += 1;
            assert!(steps < 1000);
        }
        assert!(x[2] <= 0.0, "fuel exhausted");
        assert!(x[0] > 10.0, "still airborne");
        // 30 fuel at 0.2 per step, up to one step of rounding drift.
        assert!((150..=151).contains(&steps), "steps = {steps}");
    }

    #[test]
    fn start_sampling_in_region_and_deterministic() {
        let env = lander();
        let mut r1 = ChaCha8Rng::seed_from_u64(4);
        let mut r2 = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..20 {
            let s = env.sample_start(&mut r1);
            assert!(s[0] > 0.0 && s[0] < 100.0);
            assert!(s[1] > -10.0 && s[1] < 10.0);
            assert_eq!(s[2], 30.0);
            assert_eq!(s, env.sample_start(&mut r2));
        }
    }
}

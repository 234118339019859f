//! Property tests for the clipping geometry and the trajectory contracts.

use clipdp::clip::{clip_fraction_gradients, clipped_jacobians, clipped_transition, clipping_fraction};
use clipdp::env::{Environment, ModelJacobians, Plane, State};
use clipdp::envs::Lander;
use clipdp::linalg::Jacobian;
use clipdp::nets::Actor;
use clipdp::traj::{evaluate_return, unroll};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn plane3(point: [f64; 3], normal: [f64; 3], name: &'static str) -> Plane {
    Plane::new(point.to_vec(), normal.to_vec(), name)
}

proptest! {
    /// For a transition that strictly straddles the plane, λ lies in (0, 1)
    /// and the clipped state sits on the plane to within 1e-9.
    #[test]
    fn lambda_in_unit_interval_and_clipped_state_on_plane(
        height in 0.01f64..100.0,
        depth in 0.01f64..100.0,
        lateral in -50.0f64..50.0,
        cost in 0.0f64..10.0,
    ) {
        let plane = plane3([0.0; 3], [1.0, 0.0, 0.0], "wall");
        let x = State(vec![height, 1.0, 2.0]);
        let f_next = State(vec![-depth, 1.0 + lateral, 2.5]);
        let lambda = clipping_fraction(&x, &f_next, &plane).unwrap();
        prop_assert!(lambda > 0.0 && lambda < 1.0);
        let (clipped, charged) = clipped_transition(&x, &f_next, cost, &plane).unwrap();
        let offset = plane.offset(clipped.as_slice()).abs();
        let scale = clipped.as_slice().iter().map(|v| v * v).sum::<f64>().sqrt().max(1.0);
        prop_assert!(offset <= 1e-9 * scale);
        prop_assert!((charged - lambda * cost).abs() <= 1e-12 * cost.abs().max(1.0));
    }

    /// The clipping fraction and every clipped derivative are invariant
    /// under rescaling the plane normal.
    #[test]
    fn clipping_is_scale_invariant_in_the_normal(
        scale in prop_oneof![0.001f64..1000.0, -1000.0f64..-0.001],
        height in 0.1f64..10.0,
        vx in -5.0f64..-0.1,
        vy in -3.0f64..3.0,
    ) {
        let x = State(vec![height, 0.5]);
        let v = vec![vx * height, vy];
        let jac = ModelJacobians {
            df_dx: Jacobian::from_rows(&[&[0.9, 0.1], &[-0.2, 1.1]]),
            df_da: Jacobian::from_rows(&[&[0.6, 0.3]]),
            du_dx: vec![0.4, -0.1],
            du_da: vec![0.2],
        };
        let p1 = Plane::new(vec![0.0, 0.0], vec![1.0, 0.0], "unit");
        let p2 = Plane::new(vec![0.0, 0.0], vec![scale, 0.0], "scaled");
        let f_next = State(vec![x[0] + v[0], x[1] + v[1]]);
        prop_assume!(f_next[0] < 0.0);

        let l1 = clipping_fraction(&x, &f_next, &p1).unwrap();
        let l2 = clipping_fraction(&x, &f_next, &p2).unwrap();
        prop_assert!((l1 - l2).abs() <= 1e-12);

        let (g1x, g1a) = clip_fraction_gradients(&x, &jac, &p1, &v).unwrap();
        let (g2x, g2a) = clip_fraction_gradients(&x, &jac, &p2, &v).unwrap();
        for (a, b) in g1x.iter().zip(&g2x).chain(g1a.iter().zip(&g2a)) {
            prop_assert!((a - b).abs() <= 1e-9 * a.abs().max(1.0));
        }

        let c1 = clipped_jacobians(&x, &v, 0.7, &jac, &p1, l1).unwrap();
        let c2 = clipped_jacobians(&x, &v, 0.7, &jac, &p2, l2).unwrap();
        for (a, b) in c1.dfc_dx.entries().iter().zip(c2.dfc_dx.entries()) {
            prop_assert!((a - b).abs() <= 1e-9 * a.abs().max(1.0));
        }
        for (a, b) in c1.duc_dx.iter().zip(&c2.duc_dx) {
            prop_assert!((a - b).abs() <= 1e-9 * a.abs().max(1.0));
        }
    }

    /// Unrolled trajectories store exactly the return the evaluator
    /// recomputes, and a clipped terminal state lies on its plane.
    #[test]
    fn unroll_return_consistency(seed in 0u64..500) {
        let env = Lander::default();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let actor = Actor::init(&env, &mut rng);
        let x0 = env.sample_start(&mut rng);
        let traj = unroll(&env, &actor, &x0, 1.0, true, env.max_steps(), 0.0, &mut rng).unwrap();
        prop_assert_eq!(traj.return_value, evaluate_return(&traj, 1.0));
        let ev = traj.clip.as_ref().unwrap();
        prop_assert!(ev.lambda > 0.0 && ev.lambda <= 1.0);
        let terminal = traj.terminal_state();
        let norm = terminal.as_slice().iter().map(|v| v * v).sum::<f64>().sqrt().max(1.0);
        prop_assert!(ev.plane.offset(terminal.as_slice()).abs() <= 1e-9 * norm);
    }

    /// Scaled network inputs round-trip through the gradient embedding.
    #[test]
    fn net_scaling_roundtrip(a in -100.0f64..100.0, b in -100.0f64..100.0, c in -100.0f64..100.0) {
        let env = Lander::default();
        let io = env.net_io();
        let g_net = vec![a, b, c];
        let raw = io.embed_gradient(3, &g_net);
        let back = io.project_gradient(&raw);
        for (x, y) in g_net.iter().zip(&back) {
            prop_assert!((x - y).abs() <= 1e-12 * x.abs().max(1.0));
        }
    }
}

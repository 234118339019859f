//! The cart-pole zero-gradient effect, and how clipping fixes it.
//!
//! With the duration-based cost, every cost derivative the model exposes is
//! zero, so without clipping the exact BPTT gradient is the zero vector:
//! nothing can ever be learned. With clipping, the gradient of the clipping
//! fraction carries the learning signal and the pole balances quickly.

use clipdp::algo::{bptt_gradient, bptt_train_step, AlgoConfig};
use clipdp::env::Environment;
use clipdp::envs::CartPole;
use clipdp::nets::{draw_start_batch, Actor};
use clipdp::traj::unroll;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() {
    let env = CartPole::default();
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let actor = Actor::init(&env, &mut rng);
    let x0 = env.sample_start(&mut rng);

    // Exact gradient without clipping: identically zero.
    let traj = unroll(&env, &actor, &x0, 0.97, false, env.max_steps(), 0.0, &mut rng).unwrap();
    let g = bptt_gradient(&traj, &env, &actor, 0.97).unwrap();
    println!(
        "no clipping: ‖∂J/∂z‖ = {} over {} weights (exactly zero)",
        g.iter().map(|v| v * v).sum::<f64>().sqrt(),
        g.len()
    );

    // With clipping the same setup learns to balance.
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let mut actor = Actor::init(&env, &mut rng);
    let cfg = AlgoConfig {
        actor_lr: 0.1,
        critic_lr: 0.0,
        gamma: 0.97,
        noise_std: 0.0,
        clip_enabled: true,
        batch: draw_start_batch(&env, 5, &mut rng),
    };
    println!("with clipping:");
    for it in 0..200 {
        let stats = bptt_train_step(&env, &mut actor, &cfg, &mut rng).unwrap();
        if it % 20 == 0 || stats.mean_duration >= 300.0 {
            println!(
                "  iteration {:>3}: mean balancing duration {:>6.1} steps, J = {:.6}",
                it, stats.mean_duration, stats.mean_return
            );
        }
        if stats.mean_duration >= 300.0 {
            println!("  balanced for the full 300 steps on all five starts");
            break;
        }
    }
}

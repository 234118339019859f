//! DHP on the cart-pole with the duration-based cost, with and without
//! clipping. The vector critic learns the cost-to-go gradient in the scaled
//! state coordinates; the only true learning signal enters through the
//! clipped final step, so the no-clipping run never makes progress.

use clipdp::algo::{dhp_train_step, AlgoConfig};
use clipdp::envs::CartPole;
use clipdp::nets::{draw_start_batch, Actor, VectorCritic};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() {
    let env = CartPole::default();
    for clip in [true, false] {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mut actor = Actor::init(&env, &mut rng);
        let mut critic = VectorCritic::init(&env, 0.1, &mut rng);
        let cfg = AlgoConfig {
            actor_lr: 0.01,
            critic_lr: 1e-4,
            gamma: 0.97,
            noise_std: 0.0,
            clip_enabled: clip,
            batch: draw_start_batch(&env, 5, &mut rng),
        };
        println!("clipping {}:", if clip { "on" } else { "off" });
        let mut reached = false;
        for it in 0..3000 {
            let stats = dhp_train_step(&env, &mut actor, &mut critic, &cfg, &mut rng)
                .expect("episodes terminate");
            if it % 500 == 0 {
                println!(
                    "  iteration {:>4}: mean balancing duration {:>6.1}",
                    it, stats.mean_duration
                );
            }
            if stats.mean_duration >= 300.0 {
                println!("  reached the full 300-step balance at iteration {it}");
                reached = true;
                break;
            }
        }
        if !reached {
            println!("  never balanced within 3000 iterations");
        }
    }
}

//! Train the vertical lander with BPTT, with and without clipping, and
//! print the learning curves side by side.
//!
//! The terminal cost (impact energy) dominates this problem, and without
//! clipping its gradient is taken at the overshot state, distorting the
//! learning direction. A few hundred iterations are enough to see clipping
//! settle lower.

use clipdp::algo::{bptt_train_step, AlgoConfig};
use clipdp::envs::Lander;
use clipdp::nets::{draw_start_batch, Actor};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() {
    let env = Lander::default();
    let iterations = 2000;
    let mut curves = Vec::new();
    for clip in [true, false] {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut actor = Actor::init(&env, &mut rng);
        let cfg = AlgoConfig {
            actor_lr: 0.01,
            critic_lr: 0.0,
            gamma: 1.0,
            noise_std: 0.0,
            clip_enabled: clip,
            batch: draw_start_batch(&env, 5, &mut rng),
        };
        let mut curve = Vec::new();
        for _ in 0..iterations {
            let stats = bptt_train_step(&env, &mut actor, &cfg, &mut rng)
                .expect("lander episodes terminate");
            curve.push(stats.mean_return);
        }
        curves.push(curve);
    }

    println!("iteration   J (clip on)   J (clip off)");
    for it in [0, 10, 50, 100, 200, 500, 1000, 1999] {
        println!(
            "{:>9}   {:>11.3}   {:>12.3}",
            it, curves[0][it], curves[1][it]
        );
    }
}

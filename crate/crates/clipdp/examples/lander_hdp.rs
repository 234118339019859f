//! HDP (TD(0) with a scalar critic) on the vertical lander, with Gaussian
//! exploration noise on the actions. HDP barely touches the model
//! derivatives, so it works about equally well with or without clipping.

use clipdp::algo::{hdp_train_step, AlgoConfig};
use clipdp::envs::Lander;
use clipdp::nets::{draw_start_batch, Actor, ScalarCritic};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() {
    let env = Lander::default();
    for clip in [true, false] {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut actor = Actor::init(&env, &mut rng);
        let mut critic = ScalarCritic::init(&env, 10.0, &mut rng);
        let cfg = AlgoConfig {
            actor_lr: 1e-5,
            critic_lr: 1e-5,
            gamma: 1.0,
            noise_std: 0.1,
            clip_enabled: clip,
            batch: draw_start_batch(&env, 5, &mut rng),
        };
        println!("clipping {}:", if clip { "on" } else { "off" });
        for it in 0..=5000usize {
            let stats = hdp_train_step(&env, &mut actor, &mut critic, &cfg, &mut rng)
                .expect("episodes terminate");
            if it % 1000 == 0 {
                println!("  iteration {:>4}: mean J = {:>8.2}", it, stats.mean_return);
            }
        }
    }
}

//! Save a trained action network to a plain-text snapshot and restore it.

use clipdp::algo::{bptt_train_step, AlgoConfig};
use clipdp::env::Environment;
use clipdp::envs::Lander;
use clipdp::mlp::MlpNet;
use clipdp::nets::{draw_start_batch, Actor};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> clipdp::Result<()> {
    let env = Lander::default();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut actor = Actor::init(&env, &mut rng);
    let cfg = AlgoConfig {
        actor_lr: 0.01,
        critic_lr: 0.0,
        gamma: 1.0,
        noise_std: 0.0,
        clip_enabled: true,
        batch: draw_start_batch(&env, 5, &mut rng),
    };
    let mut last = f64::NAN;
    for _ in 0..300 {
        last = bptt_train_step(&env, &mut actor, &cfg, &mut rng)?.mean_return;
    }
    println!("trained 300 iterations, mean J = {last:.3}");

    let path = std::env::temp_dir().join("lander_actor.mlp");
    actor.net.save(std::fs::File::create(&path)?)?;
    println!("saved weights to {}", path.display());

    let restored = MlpNet::load(std::io::BufReader::new(std::fs::File::open(&path)?))?;
    assert_eq!(restored.weights(), actor.net.weights());
    let restored_actor = Actor::from_net(restored, &env);
    let mut eval_rng = ChaCha8Rng::seed_from_u64(99);
    let traj = clipdp::traj::unroll(
        &env,
        &restored_actor,
        &cfg.batch[0],
        1.0,
        true,
        env.max_steps(),
        0.0,
        &mut eval_rng,
    )?;
    println!(
        "restored actor lands with J = {:.3} from the first start state",
        traj.return_value
    );
    Ok(())
}

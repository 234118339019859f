//! Unroll one vertical-lander trajectory with and without terminal-boundary
//! clipping and show what the final step looks like in each case.

use clipdp::env::Environment;
use clipdp::env::State;
use clipdp::envs::Lander;
use clipdp::nets::Actor;
use clipdp::traj::unroll;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() {
    let env = Lander::default();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let actor = Actor::init(&env, &mut rng);
    let x0 = State(vec![100.0, -10.0, 30.0]);

    for clip in [false, true] {
        let traj = unroll(&env, &actor, &x0, 1.0, clip, env.max_steps(), 0.0, &mut rng)
            .expect("lander episodes always terminate");
        let t = traj.len();
        println!(
            "clipping {}: {} steps, return J = {:.4}",
            if clip { "on " } else { "off" },
            t,
            traj.return_value
        );
        let before = &traj.states[t - 1];
        let last = traj.terminal_state();
        println!(
            "  penultimate state (h, v, u) = ({:.4}, {:.4}, {:.4})",
            before[0], before[1], before[2]
        );
        println!(
            "  terminal state    (h, v, u) = ({:.4}, {:.4}, {:.4})",
            last[0], last[1], last[2]
        );
        match &traj.clip {
            Some(ev) => println!(
                "  clipped on the '{}' plane at fraction λ = {:.4}; the lander \
                 stops exactly on the boundary",
                ev.plane.name, ev.lambda
            ),
            None => println!(
                "  no clip event: the final Euler step overshoots below ground \
                 (h = {:.4})",
                last[0]
            ),
        }
    }
}

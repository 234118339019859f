//! Experiment runner: trains one configuration across seeds and writes the
//! learning curves as CSV, plus the gradient-verification entry point.
//!
//! CSV schema: `iteration,seed,mean_J,mean_duration`. Row 0 is an
//! evaluation of the freshly initialised networks; row `i >= 1` reports the
//! batch statistics measured during training iteration `i`. The duration
//! column is populated for the cart-pole (where it is the figure of merit)
//! and left empty for the lander. One file is written per seed next to the
//! combined file, which is merged deterministically by `(seed, iteration)`.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::algo::{
    bptt_train_step, dhp_train_step, hdp_train_step, AlgoConfig, IterationStats,
};
use crate::config::{AlgoKind, EnvKind, ExperimentConfig, GradcheckOptions};
use crate::env::Environment;
use crate::error::{Error, Result};
use crate::gradcheck::{
    check_bptt, check_clipping_derivatives, check_mlp_input_gradients,
    check_mlp_weight_gradients, check_model_jacobians, CheckReport,
};
use crate::nets::{draw_start_batch, Actor, ScalarCritic, VectorCritic};
use crate::traj::unroll;

/// Learning curve of one seed.
#[derive(Debug, Clone)]
pub struct SeedCurve {
    pub seed: u64,
    pub rows: Vec<(usize, IterationStats)>,
    pub truncated_iterations: usize,
}

impl SeedCurve {
    pub fn final_return(&self) -> Option<f64> {
        self.rows.last().map(|(_, s)| s.mean_return)
    }
}

/// Train one seed and return its curve without touching the filesystem.
pub fn run_seed(cfg: &ExperimentConfig, env: &dyn Environment, seed: u64) -> Result<SeedCurve> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut actor = Actor::init(env, &mut rng);
    let mut dhp_critic = match cfg.algo {
        AlgoKind::Dhp => Some(VectorCritic::init(env, cfg.critic_slope, &mut rng)),
        _ => None,
    };
    let mut hdp_critic = match cfg.algo {
        AlgoKind::Hdp => Some(ScalarCritic::init(env, cfg.critic_slope, &mut rng)),
        _ => None,
    };
    let algo_cfg = AlgoConfig {
        actor_lr: cfg.alpha,
        critic_lr: cfg.beta,
        gamma: cfg.gamma,
        noise_std: cfg.sigma,
        clip_enabled: cfg.clip,
        batch: draw_start_batch(env, 5, &mut rng),
    };

    let mut rows = Vec::with_capacity(cfg.iterations + 1);
    let mut truncated = 0;

    // Row 0: evaluate the initial policy (no weight updates).
    match evaluate_batch(env, &actor, &algo_cfg, &mut rng) {
        Ok(stats) => rows.push((0, stats)),
        Err(Error::Truncated { .. }) => {
            truncated += 1;
            rows.push((0, nan_stats()));
        }
        Err(e) => return Err(e),
    }

    for iter in 1..=cfg.iterations {
        let step = match cfg.algo {
            AlgoKind::Bptt => bptt_train_step(env, &mut actor, &algo_cfg, &mut rng),
            AlgoKind::Dhp => dhp_train_step(
                env,
                &mut actor,
                dhp_critic.as_mut().expect("dhp critic"),
                &algo_cfg,
                &mut rng,
            ),
            AlgoKind::Hdp => hdp_train_step(
                env,
                &mut actor,
                hdp_critic.as_mut().expect("hdp critic"),
                &algo_cfg,
                &mut rng,
            ),
        };
        match step {
            Ok(stats) => rows.push((iter, stats)),
            Err(Error::Truncated { .. }) => {
                truncated += 1;
                rows.push((iter, nan_stats()));
            }
            Err(e) => return Err(e),
        }
    }

    Ok(SeedCurve {
        seed,
        rows,
        truncated_iterations: truncated,
    })
}

fn nan_stats() -> IterationStats {
    IterationStats {
        mean_return: f64::NAN,
        mean_duration: f64::NAN,
    }
}

/// Noise-matched evaluation of the current policy on the batch, without any
/// weight update: what row 0 of the curves reports.
fn evaluate_batch(
    env: &dyn Environment,
    actor: &Actor,
    cfg: &AlgoConfig,
    rng: &mut ChaCha8Rng,
) -> Result<IterationStats> {
    let scale = 1.0 / cfg.batch.len() as f64;
    let mut stats = IterationStats {
        mean_return: 0.0,
        mean_duration: 0.0,
    };
    for x0 in &cfg.batch {
        let traj = unroll(
            env,
            actor,
            x0,
            cfg.gamma,
            cfg.clip_enabled,
            env.max_steps(),
            cfg.noise_std,
            rng,
        )?;
        stats.mean_return += scale * traj.return_value;
        stats.mean_duration += scale * traj.duration();
    }
    Ok(stats)
}

/// Train every configured seed, in parallel across the available cores,
/// and return the curves sorted by seed.
pub fn run_curves(cfg: &ExperimentConfig) -> Result<Vec<SeedCurve>> {
    cfg.validate()?;
    let env = cfg.make_env();
    let workers = std::thread::available_parallelism()
        .map(|n| n.get())
        .unwrap_or(1);
    let results: Vec<Result<SeedCurve>> = std::thread::scope(|scope| {
        let mut handles = Vec::new();
        for chunk in cfg.seeds.chunks(cfg.seeds.len().div_ceil(workers)) {
            let env = env.as_ref();
            handles.push(scope.spawn(move || {
                chunk
                    .iter()
                    .map(|&seed| run_seed(cfg, env, seed))
                    .collect::<Vec<_>>()
            }));
        }
        handles
            .into_iter()
            .flat_map(|h| h.join().expect("seed worker panicked"))
            .collect()
    });
    let mut curves = results.into_iter().collect::<Result<Vec<_>>>()?;
    curves.sort_by_key(|c| c.seed);
    Ok(curves)
}

/// Run the full experiment: every seed, CSV per seed plus the combined file.
/// Fails (after writing everything) if more than half of all iterations
/// truncated, which signals runaway policies rather than learning.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<()> {
    let curves = run_curves(cfg)?;
    for curve in &curves {
        write_csv(
            &seed_path(&cfg.out_path, curve.seed),
            cfg.env,
            std::slice::from_ref(curve),
        )?;
    }
    write_csv(&cfg.out_path, cfg.env, &curves)?;

    let total: usize = curves.iter().map(|c| c.rows.len()).sum();
    let truncated: usize = curves.iter().map(|c| c.truncated_iterations).sum();
    if truncated * 2 > total {
        return Err(Error::TruncationFlood { truncated, total });
    }
    Ok(())
}

/// `results.csv` → `results_seed3.csv`.
pub fn seed_path(base: &Path, seed: u64) -> PathBuf {
    let stem = base.file_stem().unwrap_or_default().to_string_lossy();
    let ext = base.extension().map(|e| e.to_string_lossy().to_string());
    let name = match ext {
        Some(ext) => format!("{stem}_seed{seed}.{ext}"),
        None => format!("{stem}_seed{seed}"),
    };
    base.with_file_name(name)
}

fn write_csv(path: &Path, env: EnvKind, curves: &[SeedCurve]) -> Result<()> {
    let mut out = String::from("iteration,seed,mean_J,mean_duration\n");
    for curve in curves {
        for (iter, stats) in &curve.rows {
            match env {
                EnvKind::Lander => {
                    let _ = writeln!(out, "{},{},{},", iter, curve.seed, stats.mean_return);
                }
                EnvKind::CartPole => {
                    let _ = writeln!(
                        out,
                        "{},{},{},{}",
                        iter, curve.seed, stats.mean_return, stats.mean_duration
                    );
                }
            }
        }
    }
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            std::fs::create_dir_all(dir)?;
        }
    }
    std::fs::write(path, out)?;
    Ok(())
}

/// Run the verification suites and print one report line per check.
/// Returns false if any check failed.
pub fn run_gradcheck(opts: &GradcheckOptions) -> Result<bool> {
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut reports: Vec<CheckReport> = Vec::new();

    reports.push(check_mlp_weight_gradients(20, 1e-6, 1e-6, &mut rng));
    reports.push(check_mlp_input_gradients(20, 1e-6, 1e-6, &mut rng));

    let run_lander = opts.env != Some(EnvKind::CartPole);
    let run_cartpole = opts.env != Some(EnvKind::Lander);

    if run_lander {
        let env = crate::envs::Lander::default();
        // The lander model is linear (and φ quadratic), so central
        // differences are truncation-free; a wide ε avoids cancellation
        // noise and the tight 1e-8 tolerance is meaningful.
        reports.push(check_model_jacobians(&env, 50, 1e-3, 1e-8, &mut rng)?);
        reports.push(check_clipping_derivatives(
            &env,
            1.0,
            opts.samples,
            1e-6,
            1e-5,
            &mut rng,
        )?);
        reports.push(check_bptt(&env, 1.0, true, 10, 1e-5, 1e-4, &mut rng)?);
    }
    if run_cartpole {
        let env = crate::envs::CartPole::default();
        reports.push(check_model_jacobians(&env, 50, 1e-6, 1e-6, &mut rng)?);
        reports.push(check_clipping_derivatives(
            &env,
            0.97,
            opts.samples,
            1e-6,
            1e-5,
            &mut rng,
        )?);
        reports.push(check_bptt(&env, 0.97, true, 5, 1e-5, 1e-4, &mut rng)?);
    }

    let mut all_pass = true;
    for r in &reports {
        println!("{r}");
        all_pass &= r.pass;
    }
    Ok(all_pass)
}

use anyhow::{Context, Result};
use smp_core::imp::{generate_instance, CostParams, ImpInstance};
use smp_core::l0::{generate_rr_data_with, RegressionData, RrParams};
use smp_core::rl::{log_to_csv, Architecture, Env, ImpEnv, RrEnv, TrainConfig, Trainer, DEFAULT_SUBSAMPLE};

use crate::artifacts::{instance_files, load_imp, load_rr, write_json, write_text, PolicyFile};
use crate::config::{ExperimentConfig, Problem};

pub const POLICY_FILE: &str = "policy.json";
pub const CHECKPOINT_FILE: &str = "checkpoint.json";
pub const TRAIN_LOG_FILE: &str = "train.csv";

fn imp_family(cfg: &ExperimentConfig) -> Result<Vec<ImpInstance>> {
    match &cfg.input {
        Some(path) => instance_files(path)?.iter().map(|p| load_imp(p)).collect(),
        None => (0..cfg.n)
            .map(|k| {
                let seed = cfg.seed + k as u64;
                Ok(generate_instance(seed, cfg.horizon, cfg.scenarios, cfg.schedules, &CostParams::default())?)
            })
            .collect(),
    }
}

pub fn rr_family(cfg: &ExperimentConfig) -> Result<Vec<RegressionData>> {
    match &cfg.input {
        Some(path) => instance_files(path)?.iter().map(|p| load_rr(p)).collect(),
        None => {
            let base = RrParams::default();
            let params = RrParams {
                n_obs: cfg.observations,
                n_features: cfg.features,
                min_support: base.min_support.min(cfg.features),
                max_support: base.max_support.min(cfg.features),
                ..base
            };
            (0..cfg.n)
                .map(|k| Ok(generate_rr_data_with(cfg.seed + k as u64, &params)?))
                .collect()
        }
    }
}

fn start_trainer(cfg: &ExperimentConfig, env: &dyn Env, arch: Architecture) -> Result<Trainer> {
    let mut trainer = match &cfg.resume {
        Some(path) => Trainer::load(path).with_context(|| format!("loading checkpoint {}", path.display()))?,
        None => Trainer::new(
            TrainConfig {
                total_steps: cfg.steps as u64,
                rollout_steps: cfg.rollout,
                seed: cfg.seed,
                ..TrainConfig::default()
            },
            arch,
        )?,
    };
    trainer.config.total_steps = cfg.steps as u64;
    trainer.policy.check_env(env)?;
    Ok(trainer)
}

/// Trains on the instance family, then writes the policy, the final
/// checkpoint and the per-update training log.
pub fn run(cfg: &ExperimentConfig) -> Result<()> {
    let problem = cfg.problem()?;
    let checkpoint = cfg.out.join(CHECKPOINT_FILE);
    std::fs::create_dir_all(&cfg.out).map_err(|e| smp_core::Error::io(&cfg.out, e))?;
    let (trainer, max_capacity, lambda) = match problem {
        Problem::Imp => {
            let mut env = ImpEnv::new(imp_family(cfg)?, DEFAULT_SUBSAMPLE)?;
            let arch = Architecture::imp(env.obs_dim(), env.n_actions());
            let mut trainer = start_trainer(cfg, &env, arch)?;
            trainer.train(&mut env, Some(&checkpoint))?;
            (trainer, Some(env.max_capacity()), None)
        }
        Problem::Rr => {
            let mut env = RrEnv::new(&rr_family(cfg)?, cfg.lambda)?;
            let arch = Architecture::rr(env.obs_dim(), env.n_actions());
            let mut trainer = start_trainer(cfg, &env, arch)?;
            trainer.train(&mut env, Some(&checkpoint))?;
            (trainer, None, Some(cfg.lambda))
        }
    };
    write_text(&cfg.out.join(TRAIN_LOG_FILE), &log_to_csv(&trainer.log))?;
    let file = PolicyFile {
        problem,
        max_capacity,
        lambda,
        policy: trainer.policy.clone(),
    };
    write_json(&cfg.out.join(POLICY_FILE), &file)?;
    let last = trainer.log.last().map_or(f64::NAN, |r| r.mean_return);
    println!(
        "trained {} steps over {} updates, last mean return {last:.6}",
        trainer.steps, trainer.updates
    );
    Ok(())
}

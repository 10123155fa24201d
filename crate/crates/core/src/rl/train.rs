//! PPO training loop with resumable checkpoints.

use std::path::Path;

use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::env::Env;
use super::net::{Architecture, PolicyNet};
use super::policy::{ActMode, Policy};
use super::ppo::{ppo_update, Optimizer, PpoConfig, RolloutBuffer};
use crate::error::{Error, Result};
use crate::rng::{stream, Stream};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub total_steps: u64,
    /// Steps gathered (in whole episodes) before each update.
    pub rollout_steps: usize,
    pub ppo: PpoConfig,
    pub seed: u64,
    /// Updates between checkpoints; zero disables them.
    pub checkpoint_every: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            total_steps: 300_000,
            rollout_steps: 2048,
            ppo: PpoConfig::default(),
            seed: 0,
            checkpoint_every: 10,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainLogRow {
    pub update: u64,
    pub steps: u64,
    pub mean_return: f64,
    pub entropy: f64,
    pub clip_fraction: f64,
    pub value_loss: f64,
}

pub const TRAIN_CSV_HEADER: &str = "update,steps,mean_return,entropy,clip_fraction,value_loss";

impl TrainLogRow {
    pub fn to_csv(&self) -> String {
        format!(
            "{},{},{},{},{},{}",
            self.update, self.steps, self.mean_return, self.entropy, self.clip_fraction, self.value_loss
        )
    }
}

pub fn log_to_csv(rows: &[TrainLogRow]) -> String {
    let mut out = String::from(TRAIN_CSV_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&r.to_csv());
        out.push('\n');
    }
    out
}

/// Complete training state; serialising it gives a checkpoint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trainer {
    pub config: TrainConfig,
    pub policy: Policy,
    pub optimizer: Optimizer,
    rng: ChaCha8Rng,
    pub steps: u64,
    pub updates: u64,
    pub log: Vec<TrainLogRow>,
}

impl Trainer {
    pub fn new(config: TrainConfig, arch: Architecture) -> Result<Self> {
        config.ppo.validate()?;
        if config.rollout_steps == 0 {
            return Err(Error::input("rollout size must be at least one step"));
        }
        let mut rng = stream(config.seed, Stream::Training);
        let net = PolicyNet::random(arch, &mut rng)?;
        let optimizer = Optimizer::new(config.ppo.optimizer, net.n_params());
        Ok(Self {
            config,
            policy: Policy::new(net),
            optimizer,
            rng,
            steps: 0,
            updates: 0,
            log: Vec::new(),
        })
    }

    pub fn is_done(&self) -> bool {
        self.steps >= self.config.total_steps
    }

    /// Collects one rollout and applies one PPO update.
    pub fn update<E: Env + ?Sized>(&mut self, env: &mut E) -> Result<TrainLogRow> {
        self.policy.check_env(env)?;
        let mut buffer = RolloutBuffer::default();
        let mut returns = Vec::new();
        while buffer.len() < self.config.rollout_steps {
            env.reset(&mut self.rng)?;
            let (ret, steps) = self.policy.play(env, ActMode::Sample, &mut self.rng, true)?;
            returns.push(ret);
            buffer.push_episode(steps);
        }
        let diag = ppo_update(
            &mut self.policy.net,
            &mut self.optimizer,
            &buffer,
            &self.config.ppo,
            &mut self.rng,
        )?;
        self.steps += buffer.len() as u64;
        self.updates += 1;
        let row = TrainLogRow {
            update: self.updates,
            steps: self.steps,
            mean_return: returns.iter().sum::<f64>() / returns.len() as f64,
            entropy: diag.entropy,
            clip_fraction: diag.clip_fraction,
            value_loss: diag.value_loss,
        };
        self.log.push(row);
        Ok(row)
    }

    /// Trains until the step budget is spent, checkpointing along the way.
    pub fn train<E: Env + ?Sized>(&mut self, env: &mut E, checkpoint: Option<&Path>) -> Result<()> {
        while !self.is_done() {
            self.update(env)?;
            if let Some(path) = checkpoint {
                if self.config.checkpoint_every > 0 && self.updates % self.config.checkpoint_every == 0 {
                    self.save(path)?;
                }
            }
        }
        if let Some(path) = checkpoint {
            self.save(path)?;
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }
}

/// Convenience wrapper: a fresh trainer run to completion.
pub fn train<E: Env + ?Sized>(env: &mut E, arch: Architecture, config: TrainConfig) -> Result<Trainer> {
    let mut trainer = Trainer::new(config, arch)?;
    trainer.train(env, None)?;
    Ok(trainer)
}

//! A network together with its observation standardisation.

use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::dist::Categorical;
use super::env::Env;
use super::net::PolicyNet;
use super::normalizer::RunningNorm;
use super::ppo::Transition;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Policy {
    pub net: PolicyNet,
    pub norm: RunningNorm,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ActMode {
    Sample,
    /// Always the most likely action.
    Greedy,
}

/// Output of one policy query.
#[derive(Debug, Clone, PartialEq)]
pub struct Act {
    pub action: usize,
    pub log_prob: f64,
    pub value: f64,
}

impl Policy {
    pub fn new(net: PolicyNet) -> Self {
        let norm = RunningNorm::new(net.arch().input);
        Self { net, norm }
    }

    /// Errors unless the network fits the environment's spaces.
    pub fn check_env<E: Env + ?Sized>(&self, env: &E) -> Result<()> {
        let arch = self.net.arch();
        if arch.input != env.obs_dim() || arch.n_actions != env.n_actions() || self.norm.dim() != arch.input {
            return Err(Error::input(format!(
                "policy expects {} observations and {} actions, environment has {} and {}",
                arch.input,
                arch.n_actions,
                env.obs_dim(),
                env.n_actions()
            )));
        }
        Ok(())
    }

    /// Queries on an already standardised observation.
    pub fn act_normalized<R: Rng + ?Sized>(&self, obs: &[f64], mask: &[bool], mode: ActMode, rng: &mut R) -> Result<Act> {
        let f = self.net.forward(obs)?;
        let dist = Categorical::new(&f.logits, mask)?;
        let action = match mode {
            ActMode::Sample => dist.sample(rng),
            ActMode::Greedy => dist.mode(),
        };
        Ok(Act {
            action,
            log_prob: dist.log_prob(action),
            value: f.value,
        })
    }

    /// Plays one episode from the environment's current state.
    ///
    /// Returns the raw undiscounted return and the transitions, whose rewards
    /// pass through the environment's training transform.
    pub fn play<E: Env + ?Sized, R: Rng + ?Sized>(
        &mut self,
        env: &mut E,
        mode: ActMode,
        rng: &mut R,
        update_norm: bool,
    ) -> Result<(f64, Vec<Transition>)> {
        let mut steps = Vec::new();
        let mut total = 0.0;
        loop {
            let raw = env.observation();
            if update_norm {
                self.norm.update(&raw);
            }
            let obs = self.norm.normalize(&raw);
            let mask = env.mask();
            let act = self.act_normalized(&obs, &mask, mode, rng)?;
            let step = env.step(act.action)?;
            total += step.reward;
            steps.push(Transition {
                obs,
                mask,
                action: act.action,
                log_prob: act.log_prob,
                value: act.value,
                reward: env.training_reward(step.reward),
            });
            if step.done {
                return Ok((total, steps));
            }
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let p: Self = serde_json::from_str(text)?;
        if p.norm.dim() != p.net.arch().input {
            return Err(Error::Format("normaliser and network disagree on the input size".into()));
        }
        Ok(p)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }
}

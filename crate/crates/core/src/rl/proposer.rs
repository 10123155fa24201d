//! Surrogate master proposals from a trained (or untrained) policy.

use super::env::DecisionEnv;
use super::policy::{ActMode, Policy};
use crate::error::Result;
use crate::ledger::CutLedger;
use crate::rng::{substream, Stream};
use crate::surrogate::{Proposer, RolloutBatch, SurrogateConfig};

/// Rolls out `B` episodes; episode `b` of call `call` draws from its own
/// substream of the policy stream.
pub fn surrogate_step<E: DecisionEnv + ?Sized>(
    policy: &mut Policy,
    env: &mut E,
    config: &SurrogateConfig,
    call: u64,
    mode: ActMode,
) -> Result<RolloutBatch> {
    config.validate()?;
    policy.check_env(env)?;
    let b = config.batch_size;
    let mut batch = RolloutBatch {
        decisions: Vec::with_capacity(b),
        losses: Vec::with_capacity(b),
        fixed_costs: Vec::with_capacity(b),
    };
    for episode in 0..b {
        let mut rng = substream(config.seed, Stream::Policy, call * b as u64 + episode as u64);
        env.reset(&mut rng)?;
        let (ret, _) = policy.play(env, mode, &mut rng, false)?;
        batch.decisions.push(env.column()?);
        batch.losses.push(env.rollout_loss(ret));
        batch.fixed_costs.push(env.fixed_cost());
    }
    batch.validate()?;
    Ok(batch)
}

pub struct PolicyProposer<E> {
    pub policy: Policy,
    pub env: E,
    pub mode: ActMode,
    calls: u64,
}

impl<E: DecisionEnv> PolicyProposer<E> {
    pub fn new(policy: Policy, env: E) -> Result<Self> {
        policy.check_env(&env)?;
        Ok(Self {
            policy,
            env,
            mode: ActMode::Sample,
            calls: 0,
        })
    }

    pub fn calls(&self) -> u64 {
        self.calls
    }
}

impl<E: DecisionEnv> Proposer for PolicyProposer<E> {
    fn propose(&mut self, _ledger: &CutLedger, config: &SurrogateConfig) -> Result<RolloutBatch> {
        let batch = surrogate_step(&mut self.policy, &mut self.env, config, self.calls, self.mode)?;
        self.calls += 1;
        Ok(batch)
    }
}

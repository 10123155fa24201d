//! Episodic environments with masked discrete actions.

use rand_chacha::ChaCha8Rng;

use crate::error::Result;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Step {
    pub reward: f64,
    pub done: bool,
}

pub trait Env {
    fn obs_dim(&self) -> usize;

    fn n_actions(&self) -> usize;

    /// Starts a new episode; all episode randomness comes from `rng`.
    fn reset(&mut self, rng: &mut ChaCha8Rng) -> Result<()>;

    fn observation(&self) -> Vec<f64>;

    fn mask(&self) -> Vec<bool>;

    fn step(&mut self, action: usize) -> Result<Step>;

    /// Transform applied to a raw reward before it enters training.
    fn training_reward(&self, raw: f64) -> f64 {
        raw
    }
}

/// An environment whose finished episode encodes a master decision.
pub trait DecisionEnv: Env {
    /// Master column of the finished episode.
    fn column(&self) -> Result<Vec<f64>>;

    /// Fixed cost `f_b` of the finished episode's decision.
    fn fixed_cost(&self) -> f64;

    /// Rollout loss `ℓ_b` given the episode's undiscounted return.
    fn rollout_loss(&self, episode_return: f64) -> f64;
}

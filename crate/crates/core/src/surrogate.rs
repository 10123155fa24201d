//! Bernoulli-gated surrogate proposals and the three selection rules.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ledger::CutLedger;

/// Losses at or below this are treated as zero by weighted selection.
pub const ZERO_LOSS: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Selection {
    Greedy,
    Weighted,
    Informed,
}

impl fmt::Display for Selection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Selection::Greedy => "greedy",
            Selection::Weighted => "weighted",
            Selection::Informed => "informed",
        })
    }
}

impl FromStr for Selection {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "greedy" => Ok(Selection::Greedy),
            "weighted" => Ok(Selection::Weighted),
            "informed" => Ok(Selection::Informed),
            other => Err(Error::input(format!(
                "unknown selection `{other}` (expected greedy, weighted or informed)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurrogateConfig {
    /// Probability of replacing an exact master solve by the surrogate.
    pub gamma: f64,
    pub batch_size: usize,
    pub selection: Selection,
    /// The surrogate is switched off once the relative gap drops below this.
    pub deactivate_gap: f64,
    pub seed: u64,
}

impl Default for SurrogateConfig {
    fn default() -> Self {
        Self {
            gamma: 0.75,
            batch_size: 32,
            selection: Selection::Informed,
            deactivate_gap: 0.05,
            seed: 0,
        }
    }
}

impl SurrogateConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.gamma) {
            return Err(Error::input(format!("gamma must lie in [0, 1], got {}", self.gamma)));
        }
        if self.batch_size == 0 {
            return Err(Error::input("batch_size must be at least 1"));
        }
        if !(self.deactivate_gap >= 0.0) {
            return Err(Error::input(format!(
                "deactivate_gap must be >= 0, got {}",
                self.deactivate_gap
            )));
        }
        Ok(())
    }

    /// Flat `key = value` block.
    pub fn to_text(&self) -> String {
        format!(
            "gamma = {}\nbatch_size = {}\nselection = {}\ndeactivate_gap = {}\nseed = {}\n",
            self.gamma, self.batch_size, self.selection, self.deactivate_gap, self.seed
        )
    }

    /// Parses a `key = value` block; missing keys keep their defaults and
    /// `#` starts a comment.
    pub fn from_text(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::input(format!("line {}: expected key = value", n + 1)))?;
            let value = value.trim();
            let bad = || Error::input(format!("line {}: bad value `{value}`", n + 1));
            match key.trim() {
                "gamma" => cfg.gamma = value.parse().map_err(|_| bad())?,
                "batch_size" => cfg.batch_size = value.parse().map_err(|_| bad())?,
                "selection" => cfg.selection = value.parse()?,
                "deactivate_gap" => cfg.deactivate_gap = value.parse().map_err(|_| bad())?,
                "seed" => cfg.seed = value.parse().map_err(|_| bad())?,
                other => return Err(Error::input(format!("line {}: unknown key `{other}`", n + 1))),
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Decides whether the next iteration uses the surrogate.
///
/// `current_gap` is infinite until the first exact master solve.
pub fn gate<R: Rng + ?Sized>(config: &SurrogateConfig, rng: &mut R, current_gap: f64) -> bool {
    if current_gap < config.deactivate_gap {
        return false;
    }
    rng.gen::<f64>() < config.gamma
}

/// Surrogate proposals: `B` master-feasible columns with rollout losses.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RolloutBatch {
    pub decisions: Vec<Vec<f64>>,
    pub losses: Vec<f64>,
    pub fixed_costs: Vec<f64>,
}

impl RolloutBatch {
    pub fn len(&self) -> usize {
        self.decisions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.decisions.is_empty()
    }

    pub fn validate(&self) -> Result<()> {
        if self.decisions.is_empty() {
            return Err(Error::input("rollout batch is empty"));
        }
        if self.losses.len() != self.len() || self.fixed_costs.len() != self.len() {
            return Err(Error::input(format!(
                "batch has {} decisions, {} losses, {} fixed costs",
                self.len(),
                self.losses.len(),
                self.fixed_costs.len()
            )));
        }
        Ok(())
    }
}

fn argmin(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate().skip(1) {
        if *v < values[best] {
            best = i;
        }
    }
    best
}

pub fn select_greedy(batch: &RolloutBatch) -> Result<usize> {
    batch.validate()?;
    Ok(argmin(&batch.losses))
}

/// Samples `b` with probability proportional to `1 / ℓ_b`.
pub fn select_weighted<R: Rng + ?Sized>(batch: &RolloutBatch, rng: &mut R) -> Result<usize> {
    batch.validate()?;
    let p = weighted_probabilities(&batch.losses)?;
    let u: f64 = rng.gen();
    let mut acc = 0.0;
    for (i, pi) in p.iter().enumerate() {
        acc += pi;
        if u < acc {
            return Ok(i);
        }
    }
    // rounding left `acc` just below one
    Ok(p.iter().rposition(|&pi| pi > 0.0).unwrap_or(0))
}

/// Selection mass of [`select_weighted`]. A loss at or below [`ZERO_LOSS`]
/// takes all the mass (the first such index wins).
pub fn weighted_probabilities(losses: &[f64]) -> Result<Vec<f64>> {
    if let Some(l) = losses.iter().find(|l| !(**l >= 0.0)) {
        return Err(Error::input(format!("weighted selection needs nonnegative losses, got {l}")));
    }
    let mut p = vec![0.0; losses.len()];
    if let Some(i) = losses.iter().position(|&l| l <= ZERO_LOSS) {
        p[i] = 1.0;
        return Ok(p);
    }
    let total: f64 = losses.iter().map(|l| 1.0 / l).sum();
    for (pi, l) in p.iter_mut().zip(losses) {
        *pi = (1.0 / l) / total;
    }
    Ok(p)
}

/// Picks the column with the smallest cut-approximated cost.
pub fn select_informed(batch: &RolloutBatch, ledger: &CutLedger) -> Result<usize> {
    batch.validate()?;
    let approx = ledger.approx_losses(&batch.decisions, &batch.fixed_costs)?;
    Ok(argmin(&approx))
}

pub fn select<R: Rng + ?Sized>(
    batch: &RolloutBatch,
    selection: Selection,
    ledger: &CutLedger,
    rng: &mut R,
) -> Result<usize> {
    match selection {
        Selection::Greedy => select_greedy(batch),
        Selection::Weighted => select_weighted(batch, rng),
        Selection::Informed => select_informed(batch, ledger),
    }
}

/// Source of surrogate batches for the cutting-plane loop.
pub trait Proposer {
    fn propose(&mut self, ledger: &CutLedger, config: &SurrogateConfig) -> Result<RolloutBatch>;
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{stream, Stream};

    fn batch(losses: Vec<f64>) -> RolloutBatch {
        let n = losses.len();
        RolloutBatch {
            decisions: vec![vec![0.0]; n],
            losses,
            fixed_costs: vec![0.0; n],
        }
    }

    #[test]
    fn greedy_examples() {
        assert_eq!(select_greedy(&batch(vec![5.0, 3.0, 7.0])).unwrap(), 1);
        assert_eq!(select_greedy(&batch(vec![2.0, 2.0])).unwrap(), 0);
    }

    #[test]
    fn weighted_mass() {
        assert_eq!(weighted_probabilities(&[1.0; 4]).unwrap(), vec![0.25; 4]);
        let p = weighted_probabilities(&[1.0, 2.0]).unwrap();
        assert!((p[0] - 2.0 / 3.0).abs() < 1e-15 && (p[1] - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(weighted_probabilities(&[3.0, 0.0, 0.0]).unwrap(), vec![0.0, 1.0, 0.0]);
        assert!(weighted_probabilities(&[1.0, -1.0]).is_err());
    }

    #[test]
    fn gate_extremes() {
        let mut rng = stream(1, Stream::Gate);
        let closed = SurrogateConfig {
            gamma: 0.0,
            ..Default::default()
        };
        let open = SurrogateConfig {
            gamma: 1.0,
            ..Default::default()
        };
        for _ in 0..1000 {
            assert!(!gate(&closed, &mut rng, f64::INFINITY));
            assert!(gate(&open, &mut rng, f64::INFINITY));
            assert!(!gate(&open, &mut rng, 0.01));
        }
    }

    #[test]
    fn config_text_round_trip() {
        let cfg = SurrogateConfig {
            gamma: 0.5,
            batch_size: 8,
            selection: Selection::Weighted,
            deactivate_gap: 0.1,
            seed: 99,
        };
        assert_eq!(SurrogateConfig::from_text(&cfg.to_text()).unwrap(), cfg);
        assert!(SurrogateConfig::from_text("gamma = 2").is_err());
        assert!(SurrogateConfig::from_text("colour = red").is_err());
    }
}

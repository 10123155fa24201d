//! Masked categorical distribution over log-odds.

use rand::Rng;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Categorical {
    /// Log-probabilities; masked actions hold `-∞`.
    pub log_probs: Vec<f64>,
}

impl Categorical {
    pub fn new(logits: &[f64], mask: &[bool]) -> Result<Self> {
        if logits.len() != mask.len() {
            return Err(Error::input(format!(
                "mask has {} entries for {} actions",
                mask.len(),
                logits.len()
            )));
        }
        let max = logits
            .iter()
            .zip(mask)
            .filter(|(_, &m)| m)
            .map(|(l, _)| *l)
            .fold(f64::NEG_INFINITY, f64::max);
        if max == f64::NEG_INFINITY {
            return Err(Error::input("every action is masked"));
        }
        if !max.is_finite() {
            return Err(Error::Numerical("non-finite log-odds".into()));
        }
        let sum: f64 = logits
            .iter()
            .zip(mask)
            .filter(|(_, &m)| m)
            .map(|(l, _)| (l - max).exp())
            .sum();
        let log_z = max + sum.ln();
        let log_probs = logits
            .iter()
            .zip(mask)
            .map(|(l, &m)| if m { l - log_z } else { f64::NEG_INFINITY })
            .collect();
        Ok(Self { log_probs })
    }

    pub fn probs(&self) -> Vec<f64> {
        self.log_probs.iter().map(|l| l.exp()).collect()
    }

    pub fn log_prob(&self, action: usize) -> f64 {
        self.log_probs[action]
    }

    pub fn entropy(&self) -> f64 {
        -self
            .log_probs
            .iter()
            .filter(|l| l.is_finite())
            .map(|l| l.exp() * l)
            .sum::<f64>()
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let u: f64 = rng.gen();
        let mut acc = 0.0;
        let mut last = 0;
        for (a, l) in self.log_probs.iter().enumerate() {
            if l.is_finite() {
                acc += l.exp();
                last = a;
                if u < acc {
                    return a;
                }
            }
        }
        last
    }

    /// Most likely action, lowest index on ties.
    pub fn mode(&self) -> usize {
        let mut best = 0;
        for (a, l) in self.log_probs.iter().enumerate() {
            if *l > self.log_probs[best] {
                best = a;
            }
        }
        best
    }

    /// `∂ log π(a) / ∂ logits`.
    pub fn grad_log_prob(&self, action: usize) -> Vec<f64> {
        self.log_probs
            .iter()
            .enumerate()
            .map(|(j, l)| {
                let p = if l.is_finite() { l.exp() } else { 0.0 };
                if j == action {
                    1.0 - p
                } else {
                    -p
                }
            })
            .collect()
    }

    /// `∂ H / ∂ logits`.
    pub fn grad_entropy(&self) -> Vec<f64> {
        let h = self.entropy();
        self.log_probs
            .iter()
            .map(|l| if l.is_finite() { -l.exp() * (l + h) } else { 0.0 })
            .collect()
    }
}

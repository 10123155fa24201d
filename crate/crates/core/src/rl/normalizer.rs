//! Running observation standardisation.

use serde::{Deserialize, Serialize};

/// Smallest variance used when dividing.
pub const VAR_FLOOR: f64 = 1e-8;
/// Standardised values are clipped to this magnitude.
pub const CLIP: f64 = 10.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunningNorm {
    pub count: f64,
    pub mean: Vec<f64>,
    /// Population variance of everything seen so far.
    pub var: Vec<f64>,
}

impl RunningNorm {
    pub fn new(dim: usize) -> Self {
        Self {
            count: 0.0,
            mean: vec![0.0; dim],
            var: vec![1.0; dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    /// Welford update with a single observation.
    pub fn update(&mut self, x: &[f64]) {
        self.count += 1.0;
        let n = self.count;
        for ((m, v), &xi) in self.mean.iter_mut().zip(self.var.iter_mut()).zip(x) {
            if n == 1.0 {
                *m = xi;
                *v = 0.0;
                continue;
            }
            let d = xi - *m;
            *m += d / n;
            *v += (d * (xi - *m) - *v) / n;
        }
    }

    pub fn normalize(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(&self.mean)
            .zip(&self.var)
            .map(|((xi, m), v)| ((xi - m) / v.max(VAR_FLOOR).sqrt()).clamp(-CLIP, CLIP))
            .collect()
    }
}

//! Synthetic sparse regression data.

use nalgebra::{DMatrix, DVector};
use rand::seq::index::sample;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{stream, Stream};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionData {
    /// Observations, one row of `P` features each.
    pub x: Vec<Vec<f64>>,
    pub y: Vec<f64>,
    pub beta_true: Vec<f64>,
    /// Number of nonzero entries of `beta_true`.
    pub support_size: usize,
    /// Interval the additive noise was drawn from.
    pub noise_range: [f64; 2],
}

impl RegressionData {
    pub fn n_obs(&self) -> usize {
        self.y.len()
    }

    pub fn n_features(&self) -> usize {
        self.beta_true.len()
    }

    pub fn validate(&self) -> Result<()> {
        let p = self.n_features();
        if self.x.len() != self.y.len() {
            return Err(Error::input(format!("{} rows of X for {} responses", self.x.len(), self.y.len())));
        }
        if let Some(i) = self.x.iter().position(|row| row.len() != p) {
            return Err(Error::input(format!("row {i} of X does not have {p} features")));
        }
        if self.x.iter().flatten().chain(&self.y).any(|v| !v.is_finite()) {
            return Err(Error::input("regression data contains non-finite values"));
        }
        Ok(())
    }

    pub fn design(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.n_obs(), self.n_features(), |i, j| self.x[i][j])
    }

    pub fn response(&self) -> DVector<f64> {
        DVector::from_column_slice(&self.y)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let data: Self = serde_json::from_str(text)?;
        data.validate()?;
        Ok(data)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RrParams {
    pub n_obs: usize,
    pub n_features: usize,
    pub min_support: usize,
    pub max_support: usize,
    pub coef_bound: f64,
    /// Noise interval as fractions of the mean signal.
    pub noise_low: f64,
    pub noise_high: f64,
}

impl Default for RrParams {
    fn default() -> Self {
        Self {
            n_obs: 250,
            n_features: 10,
            min_support: 3,
            max_support: 8,
            coef_bound: 10.0,
            noise_low: 0.05,
            noise_high: 0.25,
        }
    }
}

pub fn generate_rr_data(seed: u64) -> RegressionData {
    generate_rr_data_with(seed, &RrParams::default()).expect("default parameters are valid")
}

pub fn generate_rr_data_with(seed: u64, params: &RrParams) -> Result<RegressionData> {
    let (m, p) = (params.n_obs, params.n_features);
    if p == 0 || m < p {
        return Err(Error::input(format!("need 1 <= P <= M, got M={m}, P={p}")));
    }
    if params.min_support > params.max_support || params.min_support > p {
        return Err(Error::input("support size range is empty or exceeds P"));
    }
    let mut rng = stream(seed, Stream::Data);
    let x: Vec<Vec<f64>> = (0..m).map(|_| (0..p).map(|_| rng.sample(StandardNormal)).collect()).collect();
    let k = rng.gen_range(params.min_support..=params.max_support.min(p));
    let mut beta_true = vec![0.0; p];
    for j in sample(&mut rng, p, k).into_iter() {
        beta_true[j] = rng.gen_range(-params.coef_bound..=params.coef_bound);
    }
    let signal: Vec<f64> = x
        .iter()
        .map(|row| row.iter().zip(&beta_true).map(|(a, b)| a * b).sum())
        .collect();
    let mean = signal.iter().sum::<f64>() / m as f64;
    let (a, b) = (params.noise_low * mean, params.noise_high * mean);
    let (lo, hi) = (a.min(b), a.max(b));
    let y = signal
        .iter()
        .map(|s| s + if hi > lo { rng.gen_range(lo..hi) } else { lo })
        .collect();
    Ok(RegressionData {
        x,
        y,
        beta_true,
        support_size: k,
        noise_range: [lo, hi],
    })
}

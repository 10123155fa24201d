//! Support recovery and error metrics for sparse regression.

use serde::{Deserialize, Serialize};

use super::RegressionData;

/// Coefficients at or below this magnitude count as zero.
pub const SUPPORT_THRESHOLD: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RrMetrics {
    /// Support mismatches divided by the true support size.
    pub beta_recovery: f64,
    pub beta_mse: f64,
    pub pred_mse: f64,
}

pub fn rr_metrics(beta_hat: &[f64], data: &RegressionData) -> RrMetrics {
    let p = data.n_features();
    assert_eq!(beta_hat.len(), p, "coefficient vector has the wrong length");
    let k = data.beta_true.iter().filter(|b| **b != 0.0).count().max(1);
    let mismatches = data
        .beta_true
        .iter()
        .zip(beta_hat)
        .filter(|(b, h)| (**b != 0.0) != (h.abs() > SUPPORT_THRESHOLD))
        .count();
    let beta_mse = data
        .beta_true
        .iter()
        .zip(beta_hat)
        .map(|(b, h)| (b - h).powi(2))
        .sum::<f64>()
        / p as f64;
    let pred_mse = data
        .x
        .iter()
        .zip(&data.y)
        .map(|(row, y)| {
            let fit: f64 = row.iter().zip(beta_hat).map(|(a, b)| a * b).sum();
            (fit - y).powi(2)
        })
        .sum::<f64>()
        / data.n_obs().max(1) as f64;
    RrMetrics {
        beta_recovery: mismatches as f64 / k as f64,
        beta_mse,
        pred_mse,
    }
}

pub const METRICS_CSV_HEADER: &str = "instance_id,method,lambda,beta_recovery,beta_mse,pred_mse";

pub fn metrics_csv_row(instance: usize, method: &str, lambda: f64, m: &RrMetrics) -> String {
    format!(
        "{instance},{method},{lambda},{},{},{}",
        m.beta_recovery, m.beta_mse, m.pred_mse
    )
}

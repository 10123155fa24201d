//! Lasso baseline by cyclic coordinate descent.

use super::fit::Design;
use super::RegressionData;
use crate::error::{Error, Result};

/// Duality-gap (or, for `λ = 0`, gradient) threshold at which descent stops.
pub const LASSO_TOL: f64 = 1e-8;
const MAX_SWEEPS: usize = 200_000;

/// Minimises `‖Xβ − y‖² + λ‖β‖₁`, sweeping coordinates in index order.
pub fn fit_lasso(data: &RegressionData, lambda: f64) -> Result<Vec<f64>> {
    if !(lambda >= 0.0) {
        return Err(Error::input(format!("lasso penalty must be >= 0, got {lambda}")));
    }
    let design = Design::new(data);
    let (x, y) = (&design.x, &design.y);
    let (m, p) = x.shape();
    let alpha = 0.5 * lambda;
    let norms: Vec<f64> = (0..p).map(|j| x.column(j).norm_squared()).collect();
    let mut beta = vec![0.0; p];
    let mut r = y.clone();

    for _ in 0..MAX_SWEEPS {
        for j in 0..p {
            if norms[j] == 0.0 {
                continue;
            }
            let col = x.column(j);
            let rho = col.dot(&r) + norms[j] * beta[j];
            let new = soft_threshold(rho, alpha) / norms[j];
            let delta = new - beta[j];
            if delta != 0.0 {
                r.axpy(-delta, &col, 1.0);
                beta[j] = new;
            }
        }
        let xtr = x.tr_mul(&r);
        let done = if alpha > 0.0 {
            // dual point ν = s·r with s scaling Xᵀν into the ℓ∞ ball of radius α
            let xtr_max = xtr.amax();
            let s = if xtr_max > alpha { alpha / xtr_max } else { 1.0 };
            let rr = r.norm_squared();
            let l1: f64 = beta.iter().map(|b| b.abs()).sum();
            let gap = 0.5 * rr + alpha * l1 - s * r.dot(y) + 0.5 * s * s * rr;
            2.0 * gap <= LASSO_TOL
        } else {
            2.0 * xtr.amax() <= LASSO_TOL * (1.0 + m as f64)
        };
        if done {
            return Ok(beta);
        }
    }
    Err(Error::Limit(format!("lasso did not converge in {MAX_SWEEPS} sweeps")))
}

fn soft_threshold(v: f64, t: f64) -> f64 {
    if v > t {
        v - t
    } else if v < -t {
        v + t
    } else {
        0.0
    }
}

/// Largest violation of the lasso optimality conditions at `beta`.
pub fn lasso_kkt_residual(data: &RegressionData, lambda: f64, beta: &[f64]) -> f64 {
    let g = Design::new(data).gradient(beta);
    g.iter()
        .zip(beta)
        .map(|(&gj, &bj)| {
            if bj != 0.0 {
                (gj + lambda * bj.signum()).abs()
            } else {
                (gj.abs() - lambda).max(0.0)
            }
        })
        .fold(0.0, f64::max)
}

//! Restricted least squares, loss gradients and exhaustive subset search.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::RegressionData;
use crate::error::{Error, Result};
use crate::ledger::Cut;

/// Ridge added to the Gram matrix when the restricted design is singular.
pub const RIDGE: f64 = 1e-8;

/// Least-squares fit restricted to a support.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubsetModel {
    pub support: Vec<bool>,
    /// Zero off the support.
    pub beta: Vec<f64>,
    /// `‖Xβ − y‖²`.
    pub loss: f64,
    /// Set when the restricted Gram matrix was singular.
    pub ridge: bool,
}

impl SubsetModel {
    pub fn support_size(&self) -> usize {
        self.support.iter().filter(|&&z| z).count()
    }

    /// `loss + λ·|z|`.
    pub fn objective(&self, lambda: f64) -> f64 {
        self.loss + lambda * self.support_size() as f64
    }
}

/// Dense design and response, prepared once per data set.
#[derive(Debug, Clone)]
pub struct Design {
    pub x: DMatrix<f64>,
    pub y: DVector<f64>,
}

impl Design {
    pub fn new(data: &RegressionData) -> Self {
        Self {
            x: data.design(),
            y: data.response(),
        }
    }

    pub fn n_features(&self) -> usize {
        self.x.ncols()
    }

    pub fn loss(&self, beta: &[f64]) -> f64 {
        let r = &self.x * DVector::from_column_slice(beta) - &self.y;
        r.norm_squared()
    }

    /// `2 Xᵀ(Xβ − y)`.
    pub fn gradient(&self, beta: &[f64]) -> Vec<f64> {
        let r = &self.x * DVector::from_column_slice(beta) - &self.y;
        (self.x.tr_mul(&r) * 2.0).iter().copied().collect()
    }

    pub fn fit(&self, support: &[bool]) -> Result<SubsetModel> {
        let p = self.n_features();
        if support.len() != p {
            return Err(Error::input(format!("support has {} entries for {p} features", support.len())));
        }
        let cols: Vec<usize> = (0..p).filter(|&j| support[j]).collect();
        let mut beta = vec![0.0; p];
        let mut ridge = false;
        if !cols.is_empty() {
            let xz = self.x.select_columns(&cols);
            let coef = match solve_qr(&xz, &self.y) {
                Some(c) => c,
                None => {
                    ridge = true;
                    let mut gram = xz.tr_mul(&xz);
                    for i in 0..cols.len() {
                        gram[(i, i)] += RIDGE;
                    }
                    let rhs = xz.tr_mul(&self.y);
                    gram.cholesky()
                        .map(|c| c.solve(&rhs))
                        .ok_or_else(|| Error::Numerical("ridge-regularised Gram matrix is not positive definite".into()))?
                }
            };
            for (&j, &c) in cols.iter().zip(coef.iter()) {
                beta[j] = c;
            }
        }
        let loss = self.loss(&beta);
        Ok(SubsetModel {
            support: support.to_vec(),
            beta,
            loss,
            ridge,
        })
    }
}

/// Least squares through Householder QR; `None` when `R` is numerically singular.
fn solve_qr(a: &DMatrix<f64>, b: &DVector<f64>) -> Option<DVector<f64>> {
    let k = a.ncols();
    let qr = a.clone().qr();
    let r = qr.r();
    let scale = (0..k).map(|i| r[(i, i)].abs()).fold(0.0, f64::max);
    if scale == 0.0 || (0..k).any(|i| r[(i, i)].abs() <= 1e-12 * scale) {
        return None;
    }
    let qtb = qr.q().tr_mul(b);
    r.solve_upper_triangular(&qtb)
}

pub fn fit_subset(data: &RegressionData, support: &[bool]) -> Result<SubsetModel> {
    Design::new(data).fit(support)
}

/// Tangent plane of the squared loss at `beta`: `θ ≥ ℓ(β₀) + ∇ℓ(β₀)ᵀ(β − β₀)`.
pub fn subgradient_cut(data: &RegressionData, beta: &[f64]) -> Result<Cut> {
    tangent_cut(&Design::new(data), beta)
}

pub(crate) fn tangent_cut(design: &Design, beta: &[f64]) -> Result<Cut> {
    if beta.len() != design.n_features() || beta.iter().any(|b| !b.is_finite()) {
        return Err(Error::input("cut point must be a finite vector of length P"));
    }
    let g = design.gradient(beta);
    let loss = design.loss(beta);
    let constant = loss - g.iter().zip(beta).map(|(a, b)| a * b).sum::<f64>();
    Ok(Cut {
        scenario: 0,
        coeffs: g,
        constant,
    })
}

pub fn support_from_mask(mask: u32, p: usize) -> Vec<bool> {
    (0..p).map(|j| (mask >> j) & 1 == 1).collect()
}

/// Relative tolerance under which two objectives count as tied.
pub const TIE_TOL: f64 = 1e-9;

/// Whether `(a, |za|)` beats `(b, |zb|)`: lower objective, ties to the smaller support.
pub fn beats(a: f64, za: usize, b: f64, zb: usize) -> bool {
    let tol = TIE_TOL * (1.0 + a.abs().max(b.abs()));
    a < b - tol || ((a - b).abs() <= tol && za < zb)
}

/// Best support by exhaustive enumeration of all `2^P` subsets.
pub fn enumerate_best_subset(data: &RegressionData, lambda: f64) -> Result<SubsetModel> {
    let p = data.n_features();
    if p > 20 {
        return Err(Error::input(format!("enumeration limited to 20 features, got {p}")));
    }
    let design = Design::new(data);
    let mut best: Option<SubsetModel> = None;
    for mask in 0..(1u32 << p) {
        let model = design.fit(&support_from_mask(mask, p))?;
        let better = match &best {
            None => true,
            Some(b) => beats(model.objective(lambda), model.support_size(), b.objective(lambda), b.support_size()),
        };
        if better {
            best = Some(model);
        }
    }
    Ok(best.expect("at least the empty support is evaluated"))
}

//! Feature-selection episodes for L0-penalised regression.
//!
//! Each step adds one feature and refits on the enlarged support. A step
//! earns its loss reduction minus the penalty `λ`; a feature whose reduction
//! falls short of `λ` is not kept and ends the episode. The return is thus
//! `‖y‖² − ‖Xβ|_z − y‖² − λ|z|` for the final support `z`.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{ContinuousCDF, StudentsT};

use super::env::{DecisionEnv, Env, Step};
use crate::error::{Error, Result};
use crate::l0::{Design, RegressionData, SubsetModel};

/// Full least-squares coefficients with two-sided t-test p-values.
pub fn ols_with_pvalues(design: &Design) -> Result<(Vec<f64>, Vec<f64>)> {
    let p = design.n_features();
    let fit = design.fit(&vec![true; p])?;
    let m = design.x.nrows();
    if m <= p {
        return Ok((fit.beta, vec![1.0; p]));
    }
    let df = (m - p) as f64;
    let sigma2 = fit.loss / df;
    let gram = design.x.tr_mul(&design.x);
    let inv = gram
        .try_inverse()
        .ok_or_else(|| Error::Numerical("full design is rank deficient".into()))?;
    let t_dist = StudentsT::new(0.0, 1.0, df).map_err(|e| Error::Numerical(e.to_string()))?;
    let pvalues = (0..p)
        .map(|j| {
            let se = (sigma2 * inv[(j, j)]).max(0.0).sqrt();
            if se == 0.0 {
                return if fit.beta[j] == 0.0 { 1.0 } else { 0.0 };
            }
            let t = (fit.beta[j] / se).abs();
            (2.0 * (1.0 - t_dist.cdf(t))).clamp(0.0, 1.0)
        })
        .collect();
    Ok((fit.beta, pvalues))
}

#[derive(Debug, Clone)]
struct Prepared {
    design: Design,
    beta_full: Vec<f64>,
    pvalues: Vec<f64>,
    scale: f64,
    yy: f64,
    full_loss: f64,
}

#[derive(Debug, Clone)]
pub struct RrEnv {
    data: Vec<Prepared>,
    lambda: f64,
    p: usize,
    inst: usize,
    model: Option<SubsetModel>,
    done: bool,
    shaped: f64,
}

impl RrEnv {
    pub fn new(datasets: &[RegressionData], lambda: f64) -> Result<Self> {
        if !(lambda >= 0.0) || !lambda.is_finite() {
            return Err(Error::input(format!("lambda must be finite and >= 0, got {lambda}")));
        }
        let first = datasets.first().ok_or_else(|| Error::input("no data sets given"))?;
        let p = first.n_features();
        let mut data = Vec::with_capacity(datasets.len());
        for d in datasets {
            d.validate()?;
            if d.n_features() != p {
                return Err(Error::input("data sets differ in feature count"));
            }
            let design = Design::new(d);
            let (beta_full, pvalues) = ols_with_pvalues(&design)?;
            let scale = beta_full.iter().fold(1e-12_f64, |a, b| a.max(b.abs()));
            let yy = design.y.norm_squared();
            let full_loss = design.fit(&vec![true; p])?.loss;
            data.push(Prepared {
                design,
                beta_full,
                pvalues,
                scale,
                yy,
                full_loss,
            });
        }
        Ok(Self {
            data,
            lambda,
            p,
            inst: 0,
            model: None,
            done: true,
            shaped: 0.0,
        })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn reset_with(&mut self, inst: usize) -> Result<()> {
        if inst >= self.data.len() {
            return Err(Error::input("data set index out of range"));
        }
        self.inst = inst;
        self.model = Some(self.data[inst].design.fit(&vec![false; self.p])?);
        self.done = false;
        Ok(())
    }

    /// Current support model.
    pub fn model(&self) -> Option<&SubsetModel> {
        self.model.as_ref()
    }

    /// Excess loss over the full fit, in units of λ and log-compressed once it
    /// exceeds a few times the feature count.
    fn compressed_excess(&self, loss: f64) -> f64 {
        let unit = if self.lambda > 0.0 { self.lambda } else { 1.0 };
        let excess = ((loss - self.data[self.inst].full_loss) / unit).max(0.0);
        (excess / (4.0 * self.p as f64)).ln_1p()
    }

    /// Runs from -1 for the empty model to 0 for one as good as the full fit.
    fn potential(&self, loss: f64) -> f64 {
        let span = self.compressed_excess(self.data[self.inst].yy);
        if span > 0.0 {
            -self.compressed_excess(loss) / span
        } else {
            0.0
        }
    }

    pub fn response_norm2(&self) -> f64 {
        self.data[self.inst].yy
    }
}

impl Env for RrEnv {
    fn obs_dim(&self) -> usize {
        4 * self.p
    }

    fn n_actions(&self) -> usize {
        self.p
    }

    fn reset(&mut self, rng: &mut ChaCha8Rng) -> Result<()> {
        let inst = rng.gen_range(0..self.data.len());
        self.reset_with(inst)
    }

    fn observation(&self) -> Vec<f64> {
        let d = &self.data[self.inst];
        let model = self.model.as_ref();
        let mut obs = Vec::with_capacity(self.obs_dim());
        obs.extend(d.beta_full.iter().map(|b| b / d.scale));
        obs.extend(&d.pvalues);
        obs.extend((0..self.p).map(|j| model.map_or(0.0, |m| m.beta[j] / d.scale)));
        obs.extend((0..self.p).map(|j| model.map_or(0.0, |m| f64::from(u8::from(m.support[j])))));
        obs
    }

    fn mask(&self) -> Vec<bool> {
        match (&self.model, self.done) {
            (Some(m), false) => m.support.iter().map(|&z| !z).collect(),
            _ => vec![false; self.p],
        }
    }

    fn step(&mut self, action: usize) -> Result<Step> {
        if self.done {
            return Err(Error::Internal("step called on a finished episode".into()));
        }
        if !self.mask().get(action).copied().unwrap_or(false) {
            return Err(Error::Internal(format!("feature {action} is masked")));
        }
        let current = self.model.as_ref().expect("episode in progress");
        let mut support = current.support.clone();
        support[action] = true;
        let next = self.data[self.inst].design.fit(&support)?;
        let reduction = current.loss - next.loss;
        if reduction < self.lambda {
            self.done = true;
            self.shaped = 0.0;
            return Ok(Step { reward: 0.0, done: true });
        }
        self.done = support.iter().all(|&z| z);
        self.shaped = self.potential(next.loss) - self.potential(current.loss) - 1.0 / self.p as f64;
        self.model = Some(next);
        Ok(Step {
            reward: reduction - self.lambda,
            done: self.done,
        })
    }

    /// Each kept feature costs `1/P` and earns the change in potential, so an
    /// episode returns the share of explainable loss it explained minus the
    /// share of features it kept, on the same scale for every data set.
    fn training_reward(&self, _raw: f64) -> f64 {
        self.shaped
    }
}

impl DecisionEnv for RrEnv {
    fn column(&self) -> Result<Vec<f64>> {
        self.model
            .as_ref()
            .map(|m| m.beta.clone())
            .ok_or_else(|| Error::input("no episode has been run"))
    }

    fn fixed_cost(&self) -> f64 {
        self.model.as_ref().map_or(0.0, |m| self.lambda * m.support_size() as f64)
    }

    fn rollout_loss(&self, episode_return: f64) -> f64 {
        (self.response_norm2() - episode_return).max(0.0)
    }
}

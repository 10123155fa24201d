//! Clipped-ratio policy optimisation.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::dist::Categorical;
use super::gae::standardize;
use super::net::PolicyNet;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OptimizerKind {
    Adam,
    Sgd,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PpoConfig {
    pub gamma: f64,
    pub gae_lambda: f64,
    pub clip: f64,
    pub value_coef: f64,
    pub entropy_coef: f64,
    pub learning_rate: f64,
    pub epochs: usize,
    pub minibatch: usize,
    pub max_grad_norm: f64,
    pub optimizer: OptimizerKind,
}

impl Default for PpoConfig {
    fn default() -> Self {
        Self {
            gamma: 0.99,
            gae_lambda: 0.95,
            clip: 0.2,
            value_coef: 0.5,
            entropy_coef: 0.01,
            learning_rate: 3e-4,
            epochs: 4,
            minibatch: 256,
            max_grad_norm: 0.5,
            optimizer: OptimizerKind::Adam,
        }
    }
}

impl PpoConfig {
    pub fn validate(&self) -> Result<()> {
        let unit = |v: f64| (0.0..=1.0).contains(&v);
        if !unit(self.gamma) || !unit(self.gae_lambda) {
            return Err(Error::input("gamma and the GAE parameter must lie in [0, 1]"));
        }
        if !(self.clip > 0.0) || !(self.learning_rate > 0.0) || !(self.max_grad_norm > 0.0) {
            return Err(Error::input("clip, learning rate and gradient-norm bound must be positive"));
        }
        if self.epochs == 0 || self.minibatch == 0 {
            return Err(Error::input("epochs and minibatch size must be at least one"));
        }
        if !(self.value_coef >= 0.0) || !(self.entropy_coef >= 0.0) {
            return Err(Error::input("loss coefficients must be non-negative"));
        }
        Ok(())
    }
}

/// Adam moments (unused by plain gradient steps).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Optimizer {
    pub kind: OptimizerKind,
    pub step: u64,
    pub m: Vec<f64>,
    pub v: Vec<f64>,
}

impl Optimizer {
    pub const BETA1: f64 = 0.9;
    pub const BETA2: f64 = 0.999;
    pub const EPS: f64 = 1e-8;

    pub fn new(kind: OptimizerKind, n_params: usize) -> Self {
        Self {
            kind,
            step: 0,
            m: vec![0.0; n_params],
            v: vec![0.0; n_params],
        }
    }

    /// Descends along `grad`.
    pub fn apply(&mut self, params: &mut [f64], grad: &[f64], lr: f64) {
        self.step += 1;
        match self.kind {
            OptimizerKind::Sgd => {
                for (p, g) in params.iter_mut().zip(grad) {
                    *p -= lr * g;
                }
            }
            OptimizerKind::Adam => {
                let t = self.step as i32;
                let c1 = 1.0 - Self::BETA1.powi(t);
                let c2 = 1.0 - Self::BETA2.powi(t);
                for i in 0..params.len() {
                    self.m[i] = Self::BETA1 * self.m[i] + (1.0 - Self::BETA1) * grad[i];
                    self.v[i] = Self::BETA2 * self.v[i] + (1.0 - Self::BETA2) * grad[i] * grad[i];
                    let mh = self.m[i] / c1;
                    let vh = self.v[i] / c2;
                    params[i] -= lr * mh / (vh.sqrt() + Self::EPS);
                }
            }
        }
    }
}

/// One recorded decision with its (already standardised) observation.
#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub obs: Vec<f64>,
    pub mask: Vec<bool>,
    pub action: usize,
    pub log_prob: f64,
    pub value: f64,
    pub reward: f64,
}

/// Transitions of complete episodes, concatenated.
#[derive(Debug, Clone, Default)]
pub struct RolloutBuffer {
    pub transitions: Vec<Transition>,
    /// `[start, end)` ranges of each episode.
    pub episodes: Vec<(usize, usize)>,
}

impl RolloutBuffer {
    pub fn len(&self) -> usize {
        self.transitions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.transitions.is_empty()
    }

    pub fn push_episode(&mut self, steps: Vec<Transition>) {
        let start = self.transitions.len();
        self.transitions.extend(steps);
        self.episodes.push((start, self.transitions.len()));
    }

    pub fn episode_returns(&self) -> Vec<f64> {
        self.episodes
            .iter()
            .map(|&(a, b)| self.transitions[a..b].iter().map(|t| t.reward).sum())
            .collect()
    }

    /// Per-step advantages and value targets (every episode terminal).
    pub fn advantages(&self, gamma: f64, lambda: f64) -> (Vec<f64>, Vec<f64>) {
        let mut adv = Vec::with_capacity(self.len());
        let mut ret = Vec::with_capacity(self.len());
        for &(a, b) in &self.episodes {
            let r: Vec<f64> = self.transitions[a..b].iter().map(|t| t.reward).collect();
            let v: Vec<f64> = self.transitions[a..b].iter().map(|t| t.value).collect();
            let (ad, rt) = super::gae::gae(&r, &v, 0.0, gamma, lambda);
            adv.extend(ad);
            ret.extend(rt);
        }
        (adv, ret)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct PpoDiagnostics {
    pub policy_loss: f64,
    pub value_loss: f64,
    pub entropy: f64,
    pub mean_ratio: f64,
    pub clip_fraction: f64,
    pub approx_kl: f64,
}

/// Clipped surrogate `min(r·A, clip(r, 1−ε, 1+ε)·A)` and its derivative in `r`.
pub fn clipped_objective(ratio: f64, advantage: f64, clip: f64) -> (f64, f64) {
    let clipped = ratio.clamp(1.0 - clip, 1.0 + clip);
    let a = ratio * advantage;
    let b = clipped * advantage;
    if a <= b {
        (a, advantage)
    } else {
        (b, if clipped == ratio { advantage } else { 0.0 })
    }
}

/// Gradient of the per-sample loss at `net`, accumulated into `grad`, plus the
/// sample's loss terms `(policy, value, entropy, ratio, clipped)`.
fn sample_gradient(
    net: &PolicyNet,
    t: &Transition,
    advantage: f64,
    target: f64,
    cfg: &PpoConfig,
    scale: f64,
    grad: &mut [f64],
) -> Result<(f64, f64, f64, f64, bool)> {
    let f = net.forward(&t.obs)?;
    let dist = Categorical::new(&f.logits, &t.mask)?;
    let logp = dist.log_prob(t.action);
    let ratio = (logp - t.log_prob).exp();
    let (obj, dobj) = clipped_objective(ratio, advantage, cfg.clip);
    let entropy = dist.entropy();
    let verr = f.value - target;
    let vloss = verr * verr;
    if !(obj.is_finite() && vloss.is_finite() && entropy.is_finite()) {
        return Err(Error::Numerical("non-finite loss in policy update".into()));
    }
    let glp = dist.grad_log_prob(t.action);
    let gent = dist.grad_entropy();
    // loss = −obj + c_v·(V − R)² − c_e·H
    let dlogits: Vec<f64> = glp
        .iter()
        .zip(&gent)
        .map(|(gl, ge)| scale * (-dobj * ratio * gl - cfg.entropy_coef * ge))
        .collect();
    let dvalue = scale * cfg.value_coef * 2.0 * verr;
    net.backward(&t.obs, &f, &dlogits, dvalue, grad);
    let clipped = (ratio - 1.0).abs() > cfg.clip;
    Ok((-obj, vloss, entropy, ratio, clipped))
}

/// Several epochs of minibatch updates over one rollout buffer.
pub fn ppo_update<R: Rng + ?Sized>(
    net: &mut PolicyNet,
    opt: &mut Optimizer,
    buffer: &RolloutBuffer,
    cfg: &PpoConfig,
    rng: &mut R,
) -> Result<PpoDiagnostics> {
    cfg.validate()?;
    if buffer.is_empty() {
        return Err(Error::input("empty rollout buffer"));
    }
    let (mut adv, ret) = buffer.advantages(cfg.gamma, cfg.gae_lambda);
    standardize(&mut adv);

    let n = buffer.len();
    let mut order: Vec<usize> = (0..n).collect();
    let mut grad = vec![0.0; net.n_params()];
    let mut diag = PpoDiagnostics::default();
    let mut count = 0.0;
    for _ in 0..cfg.epochs {
        order.shuffle(rng);
        for chunk in order.chunks(cfg.minibatch) {
            grad.iter_mut().for_each(|g| *g = 0.0);
            let scale = 1.0 / chunk.len() as f64;
            for &i in chunk {
                let t = &buffer.transitions[i];
                let (pl, vl, ent, ratio, clipped) = sample_gradient(net, t, adv[i], ret[i], cfg, scale, &mut grad)?;
                diag.policy_loss += pl;
                diag.value_loss += vl;
                diag.entropy += ent;
                diag.mean_ratio += ratio;
                diag.clip_fraction += f64::from(u8::from(clipped));
                diag.approx_kl += (ratio - 1.0) - ratio.ln();
                count += 1.0;
            }
            let norm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
            if !norm.is_finite() {
                return Err(Error::Numerical("non-finite gradient in policy update".into()));
            }
            if norm > cfg.max_grad_norm {
                let s = cfg.max_grad_norm / norm;
                grad.iter_mut().for_each(|g| *g *= s);
            }
            opt.apply(net.params_mut(), &grad, cfg.learning_rate);
        }
    }
    for v in [
        &mut diag.policy_loss,
        &mut diag.value_loss,
        &mut diag.entropy,
        &mut diag.mean_ratio,
        &mut diag.clip_fraction,
        &mut diag.approx_kl,
    ] {
        *v /= count;
    }
    Ok(diag)
}

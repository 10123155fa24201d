//! Actor-critic multilayer perceptron with manual backpropagation.
//!
//! A shared tanh trunk feeds two heads: an actor emitting one log-odd per
//! action and a critic emitting a scalar value. Each head may have its own
//! tanh hidden layers; output layers are linear. Parameters live in a single
//! flat vector so optimisers and gradient clipping work on plain slices.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Architecture {
    pub input: usize,
    pub trunk: Vec<usize>,
    pub actor: Vec<usize>,
    pub critic: Vec<usize>,
    pub n_actions: usize,
}

impl Architecture {
    /// Four shared hidden layers of 64 units, linear heads.
    pub fn imp(input: usize, n_actions: usize) -> Self {
        Self {
            input,
            trunk: vec![64; 4],
            actor: Vec::new(),
            critic: Vec::new(),
            n_actions,
        }
    }

    /// Common layers `[256, 256]`, each head `[256, 128, 64]`.
    pub fn rr(input: usize, n_actions: usize) -> Self {
        Self {
            input,
            trunk: vec![256, 256],
            actor: vec![256, 128, 64],
            critic: vec![256, 128, 64],
            n_actions,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.input == 0 || self.n_actions == 0 {
            return Err(Error::input("network needs at least one input and one action"));
        }
        if self.trunk.iter().chain(&self.actor).chain(&self.critic).any(|&w| w == 0) {
            return Err(Error::input("hidden layers must be non-empty"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Layer {
    input: usize,
    output: usize,
    offset: usize,
    tanh: bool,
}

impl Layer {
    fn len(&self) -> usize {
        self.input * self.output + self.output
    }

    fn bias_offset(&self) -> usize {
        self.offset + self.input * self.output
    }

    fn forward(&self, params: &[f64], x: &[f64], out: &mut Vec<f64>) {
        out.clear();
        let b = self.bias_offset();
        for o in 0..self.output {
            let row = &params[self.offset + o * self.input..self.offset + (o + 1) * self.input];
            let acc = params[b + o] + dot(row, x);
            out.push(if self.tanh { acc.tanh() } else { acc });
        }
    }

    /// Given `dy` (gradient w.r.t. this layer's output), accumulates parameter
    /// gradients and writes the input gradient to `dx`.
    fn backward(&self, params: &[f64], x: &[f64], y: &[f64], dy: &[f64], grad: &mut [f64], dx: &mut Vec<f64>) {
        dx.clear();
        dx.resize(self.input, 0.0);
        let b = self.bias_offset();
        for o in 0..self.output {
            let g = if self.tanh { dy[o] * (1.0 - y[o] * y[o]) } else { dy[o] };
            if g == 0.0 {
                continue;
            }
            grad[b + o] += g;
            let start = self.offset + o * self.input;
            let row = &params[start..start + self.input];
            let grow = &mut grad[start..start + self.input];
            for i in 0..self.input {
                grow[i] += g * x[i];
                dx[i] += g * row[i];
            }
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut lanes = [0.0; 4];
    let (ca, cb) = (a.chunks_exact(4), b.chunks_exact(4));
    let (ra, rb) = (ca.remainder(), cb.remainder());
    for (x, y) in ca.zip(cb) {
        for k in 0..4 {
            lanes[k] += x[k] * y[k];
        }
    }
    let mut acc = (lanes[0] + lanes[1]) + (lanes[2] + lanes[3]);
    for (x, y) in ra.iter().zip(rb) {
        acc += x * y;
    }
    acc
}

#[derive(Debug, Clone, PartialEq)]
pub struct PolicyNet {
    arch: Architecture,
    trunk: Vec<Layer>,
    actor: Vec<Layer>,
    critic: Vec<Layer>,
    params: Vec<f64>,
}

/// Intermediate activations kept for the backward pass.
#[derive(Debug, Clone, Default)]
pub struct Forward {
    trunk: Vec<Vec<f64>>,
    actor: Vec<Vec<f64>>,
    critic: Vec<Vec<f64>>,
    pub logits: Vec<f64>,
    pub value: f64,
}

fn stack(sizes: &[usize], input: usize, output: usize, last_linear: bool, offset: &mut usize) -> Vec<Layer> {
    let mut layers = Vec::new();
    let mut prev = input;
    let widths: Vec<usize> = sizes.iter().copied().chain((output > 0).then_some(output)).collect();
    let n = widths.len();
    for (k, &w) in widths.iter().enumerate() {
        let layer = Layer {
            input: prev,
            output: w,
            offset: *offset,
            tanh: !(last_linear && k + 1 == n),
        };
        *offset += layer.len();
        layers.push(layer);
        prev = w;
    }
    layers
}

impl PolicyNet {
    /// All parameters zero.
    pub fn zeros(arch: Architecture) -> Result<Self> {
        arch.validate()?;
        let mut offset = 0;
        let trunk = stack(&arch.trunk, arch.input, 0, false, &mut offset);
        let feat = *arch.trunk.last().unwrap_or(&arch.input);
        let actor = stack(&arch.actor, feat, arch.n_actions, true, &mut offset);
        let critic = stack(&arch.critic, feat, 1, true, &mut offset);
        Ok(Self {
            arch,
            trunk,
            actor,
            critic,
            params: vec![0.0; offset],
        })
    }

    /// Gaussian weights scaled by `1/√fan_in`, zero biases; the actor's
    /// output layer is shrunk so the initial policy is near uniform.
    pub fn random<R: Rng + ?Sized>(arch: Architecture, rng: &mut R) -> Result<Self> {
        let mut net = Self::zeros(arch)?;
        let n_actor = net.actor.len();
        let layers: Vec<(Layer, f64)> = net
            .trunk
            .iter()
            .map(|l| (*l, 1.0))
            .chain(net.actor.iter().enumerate().map(|(k, l)| (*l, if k + 1 == n_actor { 0.01 } else { 1.0 })))
            .chain(net.critic.iter().map(|l| (*l, 1.0)))
            .collect();
        for (layer, gain) in layers {
            let scale = gain / (layer.input as f64).sqrt();
            for w in &mut net.params[layer.offset..layer.bias_offset()] {
                *w = scale * rng.sample::<f64, _>(StandardNormal);
            }
        }
        Ok(net)
    }

    pub fn arch(&self) -> &Architecture {
        &self.arch
    }

    pub fn n_params(&self) -> usize {
        self.params.len()
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    pub fn forward(&self, obs: &[f64]) -> Result<Forward> {
        if obs.len() != self.arch.input {
            return Err(Error::input(format!(
                "observation has {} entries, network expects {}",
                obs.len(),
                self.arch.input
            )));
        }
        let mut f = Forward::default();
        let mut x = obs.to_vec();
        for layer in &self.trunk {
            let mut y = Vec::with_capacity(layer.output);
            layer.forward(&self.params, &x, &mut y);
            f.trunk.push(y.clone());
            x = y;
        }
        for (layers, store) in [(&self.actor, &mut f.actor), (&self.critic, &mut f.critic)] {
            let mut h = x.clone();
            for layer in layers {
                let mut y = Vec::with_capacity(layer.output);
                layer.forward(&self.params, &h, &mut y);
                store.push(y.clone());
                h = y;
            }
        }
        f.logits = f.actor.last().expect("actor has an output layer").clone();
        f.value = f.critic.last().expect("critic has an output layer")[0];
        Ok(f)
    }

    /// Accumulates `∂L/∂params` into `grad` given `∂L/∂logits` and `∂L/∂value`.
    pub fn backward(&self, obs: &[f64], f: &Forward, dlogits: &[f64], dvalue: f64, grad: &mut [f64]) {
        debug_assert_eq!(grad.len(), self.params.len());
        let feat: &[f64] = f.trunk.last().map_or(obs, |v| v.as_slice());
        let mut dfeat = vec![0.0; feat.len()];
        let mut dx = Vec::new();
        for (layers, acts, dout) in [
            (&self.actor, &f.actor, dlogits.to_vec()),
            (&self.critic, &f.critic, vec![dvalue]),
        ] {
            let mut dy = dout;
            for k in (0..layers.len()).rev() {
                let x: &[f64] = if k == 0 { feat } else { &acts[k - 1] };
                layers[k].backward(&self.params, x, &acts[k], &dy, grad, &mut dx);
                std::mem::swap(&mut dy, &mut dx);
            }
            for (a, b) in dfeat.iter_mut().zip(&dy) {
                *a += b;
            }
        }
        let mut dy = dfeat;
        for k in (0..self.trunk.len()).rev() {
            let x: &[f64] = if k == 0 { obs } else { &f.trunk[k - 1] };
            self.trunk[k].backward(&self.params, x, &f.trunk[k], &dy, grad, &mut dx);
            std::mem::swap(&mut dy, &mut dx);
        }
    }

    fn layers(&self) -> impl Iterator<Item = (&'static str, &Layer)> {
        self.trunk
            .iter()
            .map(|l| ("trunk", l))
            .chain(self.actor.iter().map(|l| ("actor", l)))
            .chain(self.critic.iter().map(|l| ("critic", l)))
    }

    pub fn to_portable(&self) -> PortableNet {
        let layers = self
            .layers()
            .map(|(group, l)| PortableLayer {
                group: group.to_string(),
                activation: if l.tanh { "tanh" } else { "linear" }.to_string(),
                weights: (0..l.output)
                    .map(|o| self.params[l.offset + o * l.input..l.offset + (o + 1) * l.input].to_vec())
                    .collect(),
                bias: self.params[l.bias_offset()..l.bias_offset() + l.output].to_vec(),
            })
            .collect();
        PortableNet {
            architecture: self.arch.clone(),
            layers,
        }
    }

    pub fn from_portable(p: &PortableNet) -> Result<Self> {
        let mut net = Self::zeros(p.architecture.clone())?;
        let specs: Vec<Layer> = net.layers().map(|(_, l)| *l).collect();
        if specs.len() != p.layers.len() {
            return Err(Error::Format(format!(
                "weight file has {} layers, architecture needs {}",
                p.layers.len(),
                specs.len()
            )));
        }
        for (k, (spec, layer)) in specs.iter().zip(&p.layers).enumerate() {
            if layer.weights.len() != spec.output
                || layer.bias.len() != spec.output
                || layer.weights.iter().any(|r| r.len() != spec.input)
            {
                return Err(Error::Format(format!("layer {k} has the wrong shape")));
            }
            for (o, row) in layer.weights.iter().enumerate() {
                net.params[spec.offset + o * spec.input..spec.offset + (o + 1) * spec.input].copy_from_slice(row);
            }
            net.params[spec.bias_offset()..spec.bias_offset() + spec.output].copy_from_slice(&layer.bias);
        }
        if net.params.iter().any(|v| !v.is_finite()) {
            return Err(Error::Format("weight file contains non-finite values".into()));
        }
        Ok(net)
    }
}

/// Weight file layout: the architecture plus one entry per layer, weights
/// as `output × input` nested arrays.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PortableNet {
    pub architecture: Architecture,
    pub layers: Vec<PortableLayer>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PortableLayer {
    pub group: String,
    pub activation: String,
    pub weights: Vec<Vec<f64>>,
    pub bias: Vec<f64>,
}

impl Serialize for PolicyNet {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_portable().serialize(s)
    }
}

impl<'de> Deserialize<'de> for PolicyNet {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let p = PortableNet::deserialize(d)?;
        Self::from_portable(&p).map_err(serde::de::Error::custom)
    }
}

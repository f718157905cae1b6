//! Desk-scale differentiable regressors and their optimizers.
//!
//! Parameters live in one flat vector. Each dense layer stores its weights
//! row-major (`out x in`) followed by its biases. Hidden layers use `tanh`;
//! the last layer is affine and, for the binned head, feeds a softmax.

use std::fmt;
use std::str::FromStr;

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::seed;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Architecture {
    Linear,
    Mlp { hidden: Vec<usize> },
    Binned { bins: usize },
}

impl Architecture {
    fn layer_sizes(&self, input_dim: usize) -> Vec<usize> {
        let mut sizes = vec![input_dim];
        match self {
            Architecture::Linear => sizes.push(1),
            Architecture::Mlp { hidden } => {
                sizes.extend(hidden);
                sizes.push(1);
            }
            Architecture::Binned { bins } => sizes.push(*bins),
        }
        sizes
    }

    pub fn param_count(&self, input_dim: usize) -> usize {
        self.layer_sizes(input_dim)
            .windows(2)
            .map(|w| w[0] * w[1] + w[1])
            .sum()
    }

    pub fn is_binned(&self) -> bool {
        matches!(self, Architecture::Binned { .. })
    }
}

impl FromStr for Architecture {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let bad = |why: &str| Error::param("arch", format!("`{s}`: {why}"));
        if s == "linear" {
            return Ok(Architecture::Linear);
        }
        let (head, tail) = s.split_once(':').ok_or_else(|| bad("unknown architecture"))?;
        let sizes = tail
            .split(',')
            .map(|v| v.trim().parse::<usize>().ok().filter(|&n| n > 0))
            .collect::<Option<Vec<_>>>()
            .ok_or_else(|| bad("sizes must be positive integers"))?;
        match head {
            "mlp" if !sizes.is_empty() => Ok(Architecture::Mlp { hidden: sizes }),
            "binned" if sizes.len() == 1 && sizes[0] >= 2 => {
                Ok(Architecture::Binned { bins: sizes[0] })
            }
            "binned" => Err(bad("binned head takes one bin count >= 2")),
            _ => Err(bad("unknown architecture")),
        }
    }
}

impl fmt::Display for Architecture {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Architecture::Linear => write!(f, "linear"),
            Architecture::Mlp { hidden } => {
                let h: Vec<String> = hidden.iter().map(usize::to_string).collect();
                write!(f, "mlp:{}", h.join(","))
            }
            Architecture::Binned { bins } => write!(f, "binned:{bins}"),
        }
    }
}

/// Model output: a scalar score, or a probability vector over score bins.
#[derive(Debug, Clone, PartialEq)]
pub enum Output {
    Scalar(f64),
    Distribution(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Predictor {
    arch: Architecture,
    input_dim: usize,
    params: Vec<f64>,
}

#[derive(Debug, Clone)]
struct Activations {
    /// Inputs to each layer followed by the final pre-activation output.
    layers: Vec<Vec<f64>>,
}

/// A recorded forward pass.
#[derive(Debug, Clone)]
pub struct Tape {
    acts: Activations,
    value: f64,
    probs: Option<Vec<f64>>,
}

impl Tape {
    /// Scalar prediction (expected score for the binned head).
    pub fn value(&self) -> f64 {
        self.value
    }

    /// Bin probabilities of the binned head.
    pub fn probs(&self) -> Option<&[f64]> {
        self.probs.as_deref()
    }
}

impl Predictor {
    /// Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) initialization.
    pub fn init(arch: Architecture, input_dim: usize, seed: u64) -> Result<Self> {
        if input_dim == 0 {
            return Err(Error::param("input_dim", "must be >= 1"));
        }
        let mut rng = seed::rng(seed);
        let mut params = Vec::with_capacity(arch.param_count(input_dim));
        for w in arch.layer_sizes(input_dim).windows(2) {
            let bound = 1.0 / (w[0] as f64).sqrt();
            for _ in 0..(w[0] * w[1] + w[1]) {
                params.push(rng.random_range(-bound..bound));
            }
        }
        Ok(Predictor {
            arch,
            input_dim,
            params,
        })
    }

    pub fn from_params(arch: Architecture, input_dim: usize, params: Vec<f64>) -> Result<Self> {
        let expected = arch.param_count(input_dim);
        if params.len() != expected {
            return Err(Error::DimensionMismatch {
                expected,
                got: params.len(),
            });
        }
        Ok(Predictor {
            arch,
            input_dim,
            params,
        })
    }

    pub fn arch(&self) -> &Architecture {
        &self.arch
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    pub fn param_count(&self) -> usize {
        self.params.len()
    }

    /// Bin centers `(k + 0.5) / K` of the binned head.
    pub fn bin_centers(&self) -> Option<Vec<f64>> {
        match self.arch {
            Architecture::Binned { bins } => {
                Some((0..bins).map(|k| (k as f64 + 0.5) / bins as f64).collect())
            }
            _ => None,
        }
    }

    fn check_dim(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.input_dim {
            return Err(Error::DimensionMismatch {
                expected: self.input_dim,
                got: x.len(),
            });
        }
        Ok(())
    }

    fn run(&self, x: &[f64]) -> Activations {
        let sizes = self.arch.layer_sizes(self.input_dim);
        let n_layers = sizes.len() - 1;
        let mut layers = Vec::with_capacity(sizes.len());
        layers.push(x.to_vec());
        let mut offset = 0;
        for (l, w) in sizes.windows(2).enumerate() {
            let (fan_in, fan_out) = (w[0], w[1]);
            let weights = &self.params[offset..offset + fan_in * fan_out];
            let biases = &self.params[offset + fan_in * fan_out..offset + fan_in * fan_out + fan_out];
            offset += fan_in * fan_out + fan_out;
            let input = &layers[l];
            let hidden = l + 1 < n_layers;
            let out: Vec<f64> = (0..fan_out)
                .map(|o| {
                    let row = &weights[o * fan_in..(o + 1) * fan_in];
                    let pre = row.iter().zip(input).map(|(a, b)| a * b).sum::<f64>() + biases[o];
                    if hidden {
                        pre.tanh()
                    } else {
                        pre
                    }
                })
                .collect();
            layers.push(out);
        }
        Activations { layers }
    }

    fn softmax(logits: &[f64]) -> Vec<f64> {
        let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let exps: Vec<f64> = logits.iter().map(|v| (v - max).exp()).collect();
        let total: f64 = exps.iter().sum();
        exps.into_iter().map(|e| e / total).collect()
    }

    pub fn forward(&self, x: &[f64]) -> Result<Output> {
        self.check_dim(x)?;
        let acts = self.run(x);
        let last = acts.layers.last().expect("at least one layer");
        Ok(if self.arch.is_binned() {
            Output::Distribution(Self::softmax(last))
        } else {
            Output::Scalar(last[0])
        })
    }

    /// Scalar score; the binned head reads out `sum_k center_k * p_k`.
    pub fn predict(&self, x: &[f64]) -> Result<f64> {
        Ok(match self.forward(x)? {
            Output::Scalar(v) => v,
            Output::Distribution(p) => {
                let centers = self.bin_centers().expect("binned head");
                centers.iter().zip(&p).map(|(c, q)| c * q).sum()
            }
        })
    }

    pub fn predict_many(&self, xs: &[Vec<f64>]) -> Result<Vec<f64>> {
        xs.iter().map(|x| self.predict(x)).collect()
    }

    /// Records a forward pass for later backpropagation.
    pub fn record(&self, x: &[f64]) -> Result<Tape> {
        self.check_dim(x)?;
        let acts = self.run(x);
        let last = acts.layers.last().expect("at least one layer");
        let (value, probs) = match self.bin_centers() {
            None => (last[0], None),
            Some(centers) => {
                let p = Self::softmax(last);
                (centers.iter().zip(&p).map(|(c, q)| c * q).sum(), Some(p))
            }
        };
        Ok(Tape { acts, value, probs })
    }

    /// Adds the gradient of `upstream * predict(x)` into `grad`.
    pub fn backward_tape(&self, tape: &Tape, upstream: f64, grad: &mut [f64]) {
        let delta = match &tape.probs {
            None => vec![upstream],
            Some(p) => {
                let centers = self.bin_centers().expect("binned head");
                let g: Vec<f64> = centers.iter().map(|c| upstream * c).collect();
                Self::softmax_backward(p, &g)
            }
        };
        self.backprop(&tape.acts, delta, grad);
    }

    /// Adds the gradient of `sum_k upstream_k * p_k(x)` into `grad` (binned head only).
    pub fn backward_tape_distribution(&self, tape: &Tape, upstream: &[f64], grad: &mut [f64]) -> Result<()> {
        let Some(p) = &tape.probs else {
            return Err(Error::param("arch", "distribution gradient needs a binned head"));
        };
        if upstream.len() != p.len() {
            return Err(Error::DimensionMismatch {
                expected: p.len(),
                got: upstream.len(),
            });
        }
        let delta = Self::softmax_backward(p, upstream);
        self.backprop(&tape.acts, delta, grad);
        Ok(())
    }

    /// Gradient of `upstream * predict(x)` with respect to the parameters.
    pub fn backward(&self, x: &[f64], upstream: f64) -> Result<Vec<f64>> {
        let tape = self.record(x)?;
        let mut grad = vec![0.0; self.params.len()];
        self.backward_tape(&tape, upstream, &mut grad);
        Ok(grad)
    }

    /// Gradient of `sum_k upstream_k * p_k(x)` for the binned head.
    pub fn backward_distribution(&self, x: &[f64], upstream: &[f64]) -> Result<Vec<f64>> {
        let tape = self.record(x)?;
        let mut grad = vec![0.0; self.params.len()];
        self.backward_tape_distribution(&tape, upstream, &mut grad)?;
        Ok(grad)
    }

    fn softmax_backward(p: &[f64], g: &[f64]) -> Vec<f64> {
        let dot: f64 = p.iter().zip(g).map(|(a, b)| a * b).sum();
        p.iter().zip(g).map(|(pj, gj)| pj * (gj - dot)).collect()
    }

    /// `delta` is the gradient w.r.t. the last layer's pre-activation.
    fn backprop(&self, acts: &Activations, mut delta: Vec<f64>, grad: &mut [f64]) {
        let sizes = self.arch.layer_sizes(self.input_dim);
        let mut offsets = Vec::with_capacity(sizes.len() - 1);
        let mut offset = 0;
        for w in sizes.windows(2) {
            offsets.push(offset);
            offset += w[0] * w[1] + w[1];
        }
        for l in (0..sizes.len() - 1).rev() {
            let (fan_in, fan_out) = (sizes[l], sizes[l + 1]);
            let base = offsets[l];
            let input = &acts.layers[l];
            for o in 0..fan_out {
                let d = delta[o];
                if d == 0.0 {
                    continue;
                }
                let row = &mut grad[base + o * fan_in..base + (o + 1) * fan_in];
                for (g, a) in row.iter_mut().zip(input) {
                    *g += d * a;
                }
                grad[base + fan_in * fan_out + o] += d;
            }
            if l == 0 {
                break;
            }
            // input[l] = tanh(pre), d tanh = 1 - tanh^2
            let weights = &self.params[base..base + fan_in * fan_out];
            delta = (0..fan_in)
                .map(|i| {
                    let back: f64 = (0..fan_out).map(|o| weights[o * fan_in + i] * delta[o]).sum();
                    back * (1.0 - input[i] * input[i])
                })
                .collect();
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum OptimizerKind {
    Sgd,
    Adam,
}

impl FromStr for OptimizerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "sgd" => Ok(OptimizerKind::Sgd),
            "adam" => Ok(OptimizerKind::Adam),
            other => Err(Error::param("optimizer", format!("unknown optimizer `{other}`"))),
        }
    }
}

impl fmt::Display for OptimizerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            OptimizerKind::Sgd => "sgd",
            OptimizerKind::Adam => "adam",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptimizerSpec {
    pub kind: OptimizerKind,
    pub lr: f64,
    /// Length of the cosine schedule; 0 keeps the learning rate constant.
    pub total_steps: u64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl OptimizerSpec {
    pub fn adam(lr: f64, total_steps: u64) -> Self {
        OptimizerSpec {
            kind: OptimizerKind::Adam,
            lr,
            total_steps,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }

    pub fn sgd(lr: f64, total_steps: u64) -> Self {
        OptimizerSpec {
            kind: OptimizerKind::Sgd,
            ..Self::adam(lr, total_steps)
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lr.is_finite() && self.lr > 0.0) {
            return Err(Error::param("lr", format!("{} must be > 0", self.lr)));
        }
        if !(0.0..1.0).contains(&self.beta1) || !(0.0..1.0).contains(&self.beta2) {
            return Err(Error::param("beta", "betas must lie in [0, 1)"));
        }
        if !(self.eps > 0.0) {
            return Err(Error::param("eps", "must be > 0"));
        }
        Ok(())
    }
}

/// Cosine annealing from `initial` to 0 over `total` steps.
pub fn cosine_lr(initial: f64, step: u64, total: u64) -> f64 {
    if total == 0 {
        return initial;
    }
    let t = step.min(total) as f64 / total as f64;
    initial * (1.0 + (std::f64::consts::PI * t).cos()) / 2.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Optimizer {
    spec: OptimizerSpec,
    step: u64,
    m: Vec<f64>,
    v: Vec<f64>,
}

impl Optimizer {
    pub fn new(spec: OptimizerSpec, param_count: usize) -> Result<Self> {
        spec.validate()?;
        let moments = match spec.kind {
            OptimizerKind::Adam => param_count,
            OptimizerKind::Sgd => 0,
        };
        Ok(Optimizer {
            spec,
            step: 0,
            m: vec![0.0; moments],
            v: vec![0.0; moments],
        })
    }

    pub fn spec(&self) -> &OptimizerSpec {
        &self.spec
    }

    pub fn steps_taken(&self) -> u64 {
        self.step
    }

    pub fn current_lr(&self) -> f64 {
        cosine_lr(self.spec.lr, self.step, self.spec.total_steps)
    }

    pub fn step(&mut self, params: &mut [f64], grads: &[f64]) -> Result<()> {
        if params.len() != grads.len() {
            return Err(Error::DimensionMismatch {
                expected: params.len(),
                got: grads.len(),
            });
        }
        if grads.iter().any(|g| !g.is_finite()) {
            return Err(Error::NonFinite {
                context: format!("gradient at optimizer step {}", self.step),
            });
        }
        let lr = self.current_lr();
        match self.spec.kind {
            OptimizerKind::Sgd => {
                for (p, g) in params.iter_mut().zip(grads) {
                    *p -= lr * g;
                }
            }
            OptimizerKind::Adam => {
                if self.m.len() != params.len() {
                    return Err(Error::DimensionMismatch {
                        expected: self.m.len(),
                        got: params.len(),
                    });
                }
                let OptimizerSpec {
                    beta1, beta2, eps, ..
                } = self.spec;
                let t = (self.step + 1) as i32;
                let c1 = 1.0 - beta1.powi(t);
                let c2 = 1.0 - beta2.powi(t);
                for i in 0..params.len() {
                    let g = grads[i];
                    self.m[i] = beta1 * self.m[i] + (1.0 - beta1) * g;
                    self.v[i] = beta2 * self.v[i] + (1.0 - beta2) * g * g;
                    let m_hat = self.m[i] / c1;
                    let v_hat = self.v[i] / c2;
                    params[i] -= lr * m_hat / (v_hat.sqrt() + eps);
                }
            }
        }
        self.step += 1;
        Ok(())
    }
}

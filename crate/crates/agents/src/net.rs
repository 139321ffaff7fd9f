use arstage_core::rng;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::env::{AgentAction, GESTURE_COUNT, OBS_DIM};

pub const HIDDEN: [usize; 3] = [128, 128, 128];
pub const CONTINUOUS_ACTIONS: usize = 2;
pub const LOG_STD_MIN: f64 = -4.0;
pub const LOG_STD_MAX: f64 = 1.0;
const LOG_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

/// A dense layer's slice of the flat parameter vector: `out × inp` weights
/// row-major, then `out` biases.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LayerShape {
    pub offset: usize,
    pub inp: usize,
    pub out: usize,
}

impl LayerShape {
    fn weights(&self) -> std::ops::Range<usize> {
        self.offset..self.offset + self.inp * self.out
    }

    fn biases(&self) -> std::ops::Range<usize> {
        let w = self.offset + self.inp * self.out;
        w..w + self.out
    }

    pub fn len(&self) -> usize {
        self.out * (self.inp + 1)
    }
}

/// Tanh MLP trunk with Gaussian-mean, categorical-logit and value heads,
/// plus a state-independent log standard deviation per continuous action.
/// All parameters live in one flat vector.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyNetwork {
    pub obs_dim: usize,
    pub hidden: Vec<usize>,
    pub n_cont: usize,
    pub n_disc: usize,
    pub params: Vec<f64>,
}

/// Cached activations of a batched forward pass.
#[derive(Debug, Clone)]
pub struct Forward {
    pub batch: usize,
    /// Input followed by each hidden layer's output, row-major.
    pub acts: Vec<Vec<f64>>,
    pub mean: Vec<f64>,
    pub logits: Vec<f64>,
    pub value: Vec<f64>,
}

/// Gradients of a scalar loss with respect to the network outputs.
#[derive(Debug, Clone)]
pub struct OutputGrads {
    pub mean: Vec<f64>,
    pub logits: Vec<f64>,
    pub value: Vec<f64>,
    pub log_std: Vec<f64>,
}

impl OutputGrads {
    pub fn zeros(net: &PolicyNetwork, batch: usize) -> Self {
        Self {
            mean: vec![0.0; batch * net.n_cont],
            logits: vec![0.0; batch * net.n_disc],
            value: vec![0.0; batch],
            log_std: vec![0.0; net.n_cont],
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = [0.0f64; 8];
    let ca = a.chunks_exact(8);
    let cb = b.chunks_exact(8);
    let (ra, rb) = (ca.remainder(), cb.remainder());
    for (x, y) in ca.zip(cb) {
        for k in 0..8 {
            acc[k] += x[k] * y[k];
        }
    }
    let mut s = ((acc[0] + acc[4]) + (acc[1] + acc[5])) + ((acc[2] + acc[6]) + (acc[3] + acc[7]));
    for (x, y) in ra.iter().zip(rb) {
        s += x * y;
    }
    s
}

fn axpy(y: &mut [f64], a: f64, x: &[f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}

impl PolicyNetwork {
    /// Default shape: 27 observations, three hidden layers of 128, two
    /// continuous actions and four gestures.
    pub fn new(seed: u64) -> Self {
        Self::with_shape(OBS_DIM, &HIDDEN, CONTINUOUS_ACTIONS, GESTURE_COUNT, seed)
    }

    pub fn with_shape(obs_dim: usize, hidden: &[usize], n_cont: usize, n_disc: usize, seed: u64) -> Self {
        let mut net = Self { obs_dim, hidden: hidden.to_vec(), n_cont, n_disc, params: Vec::new() };
        let total = net.param_count();
        net.params = vec![0.0; total];
        let mut r = rng::seeded(seed);
        let layers = net.layers();
        let heads_from = hidden.len();
        for (i, l) in layers.iter().enumerate() {
            let limit = (6.0 / (l.inp + l.out) as f64).sqrt();
            let gain = match i.checked_sub(heads_from) {
                None => 1.0,
                Some(0) | Some(1) => 0.01,
                Some(_) => 1.0,
            };
            for w in &mut net.params[l.weights()] {
                *w = gain * r.random_range(-limit..limit);
            }
        }
        let ls = net.log_std_offset();
        for v in &mut net.params[ls..ls + n_cont] {
            *v = -0.5;
        }
        net
    }

    /// Trunk layers, then the mean, logits and value heads.
    pub fn layers(&self) -> Vec<LayerShape> {
        let mut out = Vec::new();
        let mut offset = 0;
        let mut inp = self.obs_dim;
        let last = *self.hidden.last().unwrap_or(&self.obs_dim);
        let dims = self.hidden.iter().copied().chain([self.n_cont, self.n_disc, 1]);
        for (i, o) in dims.enumerate() {
            if i == self.hidden.len() {
                inp = last;
            }
            let l = LayerShape { offset, inp, out: o };
            offset += l.len();
            if i < self.hidden.len() {
                inp = o;
            }
            out.push(l);
        }
        out
    }

    pub fn log_std_offset(&self) -> usize {
        self.layers().iter().map(|l| l.len()).sum()
    }

    pub fn param_count(&self) -> usize {
        self.log_std_offset() + self.n_cont
    }

    pub fn log_std(&self) -> Vec<f64> {
        let o = self.log_std_offset();
        self.params[o..o + self.n_cont].iter().map(|v| v.clamp(LOG_STD_MIN, LOG_STD_MAX)).collect()
    }

    pub fn is_finite(&self) -> bool {
        self.params.iter().all(|p| p.is_finite())
    }

    /// Rounds every parameter to the nearest 32-bit float, matching what a
    /// checkpoint stores.
    pub fn round_to_f32(&mut self) {
        for p in &mut self.params {
            *p = *p as f32 as f64;
        }
    }

    fn dense(&self, l: &LayerShape, x: &[f64], batch: usize, tanh: bool) -> Vec<f64> {
        let w = &self.params[l.weights()];
        let b = &self.params[l.biases()];
        let mut y = vec![0.0; batch * l.out];
        for n in 0..batch {
            let xr = &x[n * l.inp..(n + 1) * l.inp];
            let yr = &mut y[n * l.out..(n + 1) * l.out];
            for o in 0..l.out {
                let v = dot(xr, &w[o * l.inp..(o + 1) * l.inp]) + b[o];
                yr[o] = if tanh { v.tanh() } else { v };
            }
        }
        y
    }

    /// Batched forward pass over `batch` row-major observations.
    pub fn forward(&self, obs: &[f64], batch: usize) -> Forward {
        assert_eq!(obs.len(), batch * self.obs_dim, "observation batch shape");
        let layers = self.layers();
        let nh = self.hidden.len();
        let mut acts = vec![obs.to_vec()];
        for l in &layers[..nh] {
            let h = self.dense(l, acts.last().expect("input"), batch, true);
            acts.push(h);
        }
        let top = acts.last().expect("trunk");
        let mean = self.dense(&layers[nh], top, batch, false);
        let logits = self.dense(&layers[nh + 1], top, batch, false);
        let value = self.dense(&layers[nh + 2], top, batch, false);
        Forward { batch, acts, mean, logits, value }
    }

    /// Backpropagates output gradients into a flat parameter gradient.
    pub fn backward(&self, fwd: &Forward, g: &OutputGrads) -> Vec<f64> {
        let layers = self.layers();
        let nh = self.hidden.len();
        let batch = fwd.batch;
        let mut grad = vec![0.0; self.param_count()];
        let top = &fwd.acts[nh];
        let width = layers[nh].inp;
        let mut d_top = vec![0.0; batch * width];
        for (l, d_out) in [(&layers[nh], &g.mean), (&layers[nh + 1], &g.logits), (&layers[nh + 2], &g.value)] {
            self.dense_backward(l, top, d_out, batch, &mut grad, Some(&mut d_top));
        }
        let mut d = d_top;
        for i in (0..nh).rev() {
            let y = &fwd.acts[i + 1];
            for (di, yi) in d.iter_mut().zip(y) {
                *di *= 1.0 - yi * yi;
            }
            let mut d_in = if i > 0 { Some(vec![0.0; batch * layers[i].inp]) } else { None };
            self.dense_backward(&layers[i], &fwd.acts[i], &d, batch, &mut grad, d_in.as_deref_mut());
            if let Some(next) = d_in {
                d = next;
            }
        }
        let ls = self.log_std_offset();
        let raw = &self.params[ls..ls + self.n_cont];
        for k in 0..self.n_cont {
            if (LOG_STD_MIN..=LOG_STD_MAX).contains(&raw[k]) {
                grad[ls + k] += g.log_std[k];
            }
        }
        grad
    }

    fn dense_backward(
        &self,
        l: &LayerShape,
        x: &[f64],
        d_out: &[f64],
        batch: usize,
        grad: &mut [f64],
        mut d_in: Option<&mut [f64]>,
    ) {
        let w = &self.params[l.weights()];
        let (gw, rest) = grad[l.offset..].split_at_mut(l.inp * l.out);
        let gb = &mut rest[..l.out];
        for n in 0..batch {
            let xr = &x[n * l.inp..(n + 1) * l.inp];
            for o in 0..l.out {
                let d = d_out[n * l.out + o];
                if d == 0.0 {
                    continue;
                }
                gb[o] += d;
                axpy(&mut gw[o * l.inp..(o + 1) * l.inp], d, xr);
                if let Some(di) = d_in.as_deref_mut() {
                    axpy(&mut di[n * l.inp..(n + 1) * l.inp], d, &w[o * l.inp..(o + 1) * l.inp]);
                }
            }
        }
    }

    /// Samples an action. Returns the unclamped continuous draw, the
    /// gesture, the joint log-probability and the value estimate.
    pub fn sample(&self, obs: &[f64], r: &mut impl Rng) -> SampledAction {
        let f = self.forward(obs, 1);
        let ls = self.log_std();
        let raw: Vec<f64> = (0..self.n_cont)
            .map(|k| {
                let z: f64 = StandardNormal.sample(r);
                f.mean[k] + ls[k].exp() * z
            })
            .collect();
        let probs = softmax(&f.logits);
        let u: f64 = r.random();
        let mut acc = 0.0;
        let mut gesture = self.n_disc - 1;
        for (j, p) in probs.iter().enumerate() {
            acc += p;
            if u < acc {
                gesture = j;
                break;
            }
        }
        let logp = gaussian_logp(&raw, &f.mean, &ls) + log_softmax(&f.logits)[gesture];
        SampledAction { raw, gesture, logp, value: f.value[0] }
    }

    /// Mean continuous action and most likely gesture.
    pub fn act_deterministic(&self, obs: &[f64]) -> AgentAction {
        let f = self.forward(obs, 1);
        let gesture = argmax(&f.logits);
        AgentAction::new(f.mean[0], f.mean[1], gesture)
    }

    pub fn value(&self, obs: &[f64]) -> f64 {
        self.forward(obs, 1).value[0]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SampledAction {
    pub raw: Vec<f64>,
    pub gesture: usize,
    pub logp: f64,
    pub value: f64,
}

impl SampledAction {
    pub fn action(&self) -> AgentAction {
        AgentAction::new(self.raw[0], self.raw[1], self.gesture)
    }
}

pub fn argmax(v: &[f64]) -> usize {
    v.iter().enumerate().fold(0, |best, (i, x)| if *x > v[best] { i } else { best })
}

pub fn log_softmax(logits: &[f64]) -> Vec<f64> {
    let m = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse = m + logits.iter().map(|l| (l - m).exp()).sum::<f64>().ln();
    logits.iter().map(|l| l - lse).collect()
}

pub fn softmax(logits: &[f64]) -> Vec<f64> {
    log_softmax(logits).into_iter().map(f64::exp).collect()
}

/// Diagonal Gaussian log density.
pub fn gaussian_logp(x: &[f64], mean: &[f64], log_std: &[f64]) -> f64 {
    x.iter()
        .zip(mean)
        .zip(log_std)
        .map(|((x, m), ls)| {
            let z = (x - m) / ls.exp();
            -0.5 * z * z - ls - LOG_SQRT_2PI
        })
        .sum()
}

use arstage_core::rng;
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::demos::DemonstrationSet;
use crate::net::{log_softmax, softmax, OutputGrads, PolicyNetwork};
use crate::optim::Adam;
use crate::AgentError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BcConfig {
    pub seed: u64,
    pub epochs: usize,
    pub batch: usize,
    pub learning_rate: f64,
    /// Weight of the gesture cross-entropy relative to the action MSE.
    pub gesture_weight: f64,
}

impl Default for BcConfig {
    fn default() -> Self {
        Self { seed: 0, epochs: 50, batch: 256, learning_rate: 1e-3, gesture_weight: 0.1 }
    }
}

struct Flat {
    obs: Vec<f64>,
    target: Vec<f64>,
    gesture: Vec<usize>,
}

fn flatten(demos: &DemonstrationSet, idx: &[usize], pairs: &[(usize, usize)]) -> Flat {
    let mut f = Flat { obs: Vec::new(), target: Vec::new(), gesture: Vec::new() };
    for &i in idx {
        let (e, s) = pairs[i];
        let ep = &demos.episodes[e];
        let a = ep.actions[s];
        f.obs.extend_from_slice(&ep.observations[s]);
        f.target.extend_from_slice(&[a.forward, a.turn]);
        f.gesture.push(a.gesture);
    }
    f
}

/// Mean loss over the batch and, optionally, its gradient.
fn loss(net: &PolicyNetwork, f: &Flat, cfg: &BcConfig, want_grad: bool) -> (f64, Option<Vec<f64>>) {
    let b = f.gesture.len();
    let nc = net.n_cont;
    let nd = net.n_disc;
    let fw = net.forward(&f.obs, b);
    let mut g = OutputGrads::zeros(net, b);
    let mut total = 0.0;
    let norm = b as f64;
    for n in 0..b {
        for k in 0..nc {
            let d = fw.mean[n * nc + k] - f.target[n * nc + k];
            total += d * d / norm;
            g.mean[n * nc + k] = 2.0 * d / norm;
        }
        let logits = &fw.logits[n * nd..(n + 1) * nd];
        let lsm = log_softmax(logits);
        total -= cfg.gesture_weight * lsm[f.gesture[n]] / norm;
        let p = softmax(logits);
        for j in 0..nd {
            let ind = if j == f.gesture[n] { 1.0 } else { 0.0 };
            g.logits[n * nd + j] = cfg.gesture_weight * (p[j] - ind) / norm;
        }
    }
    let grad = want_grad.then(|| net.backward(&fw, &g));
    (total, grad)
}

/// Behavior cloning: squared error of the mean action against the demo
/// action plus cross-entropy on the gesture. Batches are drawn in one
/// seeded order fixed for all epochs. Returns the full-dataset loss before
/// training followed by the loss after each epoch.
pub fn bc_train(
    demos: &DemonstrationSet,
    policy: &PolicyNetwork,
    cfg: &BcConfig,
) -> Result<(PolicyNetwork, Vec<f64>), AgentError> {
    if demos.is_empty() {
        return Err(AgentError::EmptyDemos);
    }
    if cfg.batch == 0 || cfg.learning_rate <= 0.0 {
        return Err(AgentError::InvalidConfig("batch and learning rate must be positive".into()));
    }
    let pairs: Vec<(usize, usize)> = demos
        .episodes
        .iter()
        .enumerate()
        .flat_map(|(e, ep)| (0..ep.actions.len()).map(move |s| (e, s)))
        .collect();
    let mut order: Vec<usize> = (0..pairs.len()).collect();
    order.shuffle(&mut rng::seeded(cfg.seed));
    let batches: Vec<Flat> = order.chunks(cfg.batch).map(|c| flatten(demos, c, &pairs)).collect();
    let all = flatten(demos, &order, &pairs);

    let mut net = policy.clone();
    let mut opt = Adam::new(net.param_count(), cfg.learning_rate);
    let mut losses = vec![loss(&net, &all, cfg, false).0];
    for epoch in 0..cfg.epochs {
        for b in &batches {
            let (l, g) = loss(&net, b, cfg, true);
            let g = g.expect("gradient requested");
            if !l.is_finite() || g.iter().any(|v| !v.is_finite()) {
                return Err(AgentError::DivergenceDetected { iteration: epoch });
            }
            opt.step(&mut net.params, &g);
        }
        losses.push(loss(&net, &all, cfg, false).0);
    }
    Ok((net, losses))
}

/// Mean absolute error between the policy's mean action and the demo
/// actions, averaged over both continuous components.
pub fn mean_action_error(net: &PolicyNetwork, demos: &DemonstrationSet) -> f64 {
    let mut total = 0.0;
    let mut n = 0;
    for ep in &demos.episodes {
        for (o, a) in ep.observations.iter().zip(&ep.actions) {
            let f = net.forward(o, 1);
            total += (f.mean[0] - a.forward).abs() + (f.mean[1] - a.turn).abs();
            n += 2;
        }
    }
    if n == 0 {
        0.0
    } else {
        total / n as f64
    }
}

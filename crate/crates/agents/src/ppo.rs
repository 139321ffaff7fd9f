use arstage_core::rng::{self, SimRng};
use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::env::{CorridorEnv, EnvConfig};
use crate::net::{log_softmax, softmax, OutputGrads, PolicyNetwork};
use crate::optim::{clip_grad_norm, Adam};
use crate::AgentError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PpoConfig {
    pub seed: u64,
    /// Environment steps summed over all environments.
    pub total_steps: usize,
    pub n_envs: usize,
    /// Steps per environment per iteration.
    pub horizon: usize,
    pub gamma: f64,
    pub gae_lambda: f64,
    pub clip: f64,
    pub learning_rate: f64,
    pub minibatch: usize,
    pub epochs: usize,
    pub value_coef: f64,
    pub entropy_coef: f64,
    pub max_grad_norm: f64,
    /// Multiplies rewards before advantage estimation.
    pub reward_scale: f64,
}

impl Default for PpoConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            total_steps: 200_000,
            n_envs: 18,
            horizon: 128,
            gamma: 0.99,
            gae_lambda: 0.95,
            clip: 0.2,
            learning_rate: 3e-4,
            minibatch: 256,
            epochs: 3,
            value_coef: 0.5,
            entropy_coef: 0.001,
            max_grad_norm: 0.5,
            reward_scale: 0.01,
        }
    }
}

impl PpoConfig {
    pub fn validate(&self) -> Result<(), AgentError> {
        let ok = self.n_envs > 0
            && self.horizon > 0
            && self.minibatch > 0
            && self.epochs > 0
            && (0.0..=1.0).contains(&self.gamma)
            && (0.0..=1.0).contains(&self.gae_lambda)
            && self.clip > 0.0
            && self.learning_rate > 0.0
            && self.reward_scale > 0.0;
        if ok {
            Ok(())
        } else {
            Err(AgentError::InvalidConfig("PPO hyperparameters out of range".into()))
        }
    }
}

/// Per-iteration training statistics. Episode means cover the episodes
/// that finished during the iteration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationStats {
    pub iteration: usize,
    pub steps: usize,
    pub episodes: usize,
    pub mean_reward: Option<f64>,
    pub mean_length: Option<f64>,
    pub mean_zones: Option<f64>,
    pub policy_loss: f64,
    pub value_loss: f64,
    pub entropy: f64,
}

pub fn stats_csv(stats: &[IterationStats]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    let opt = |v: Option<f64>| v.map_or(String::new(), |v| v.to_string());
    w.write_record(["iteration", "steps", "episodes", "mean_reward", "mean_length", "mean_zones", "policy_loss", "value_loss", "entropy"])
        .expect("in-memory write");
    for s in stats {
        w.write_record([
            s.iteration.to_string(),
            s.steps.to_string(),
            s.episodes.to_string(),
            opt(s.mean_reward),
            opt(s.mean_length),
            opt(s.mean_zones),
            s.policy_loss.to_string(),
            s.value_loss.to_string(),
            s.entropy.to_string(),
        ])
        .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("flush")).expect("utf8")
}

/// Frozen training samples for one gradient step.
#[derive(Debug, Clone, PartialEq)]
pub struct Minibatch {
    pub obs: Vec<f64>,
    /// Unclamped continuous actions, row-major.
    pub raw: Vec<f64>,
    pub gesture: Vec<usize>,
    pub old_logp: Vec<f64>,
    pub advantage: Vec<f64>,
    pub returns: Vec<f64>,
}

impl Minibatch {
    pub fn len(&self) -> usize {
        self.gesture.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gesture.is_empty()
    }

    fn select(&self, idx: &[usize], obs_dim: usize, n_cont: usize) -> Minibatch {
        let mut m = Minibatch {
            obs: Vec::with_capacity(idx.len() * obs_dim),
            raw: Vec::with_capacity(idx.len() * n_cont),
            gesture: Vec::with_capacity(idx.len()),
            old_logp: Vec::with_capacity(idx.len()),
            advantage: Vec::with_capacity(idx.len()),
            returns: Vec::with_capacity(idx.len()),
        };
        for &i in idx {
            m.obs.extend_from_slice(&self.obs[i * obs_dim..(i + 1) * obs_dim]);
            m.raw.extend_from_slice(&self.raw[i * n_cont..(i + 1) * n_cont]);
            m.gesture.push(self.gesture[i]);
            m.old_logp.push(self.old_logp[i]);
            m.advantage.push(self.advantage[i]);
            m.returns.push(self.returns[i]);
        }
        m
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct LossParts {
    pub total: f64,
    pub policy: f64,
    pub value: f64,
    pub entropy: f64,
}

/// Clipped-surrogate PPO loss averaged over the minibatch, and optionally
/// its gradient. `norm` is the divisor used for averaging, so chunks of a
/// minibatch can be evaluated separately and summed.
fn loss_impl(net: &PolicyNetwork, mb: &Minibatch, cfg: &PpoConfig, norm: f64, want_grad: bool) -> (LossParts, Option<Vec<f64>>) {
    let b = mb.len();
    let nc = net.n_cont;
    let nd = net.n_disc;
    let f = net.forward(&mb.obs, b);
    let ls = net.log_std();
    let gauss_entropy: f64 = ls.iter().map(|l| l + 0.5 + 0.918_938_533_204_672_8).sum();
    let mut g = OutputGrads::zeros(net, b);
    let mut parts = LossParts::default();
    for n in 0..b {
        let mean = &f.mean[n * nc..(n + 1) * nc];
        let raw = &mb.raw[n * nc..(n + 1) * nc];
        let logits = &f.logits[n * nd..(n + 1) * nd];
        let lsm = log_softmax(logits);
        let probs = softmax(logits);
        let mut logp = lsm[mb.gesture[n]];
        let mut z2 = vec![0.0; nc];
        for k in 0..nc {
            let z = (raw[k] - mean[k]) / ls[k].exp();
            z2[k] = z * z;
            logp += -0.5 * z * z - ls[k] - 0.918_938_533_204_672_8;
        }
        let a = mb.advantage[n];
        let ratio = (logp - mb.old_logp[n]).exp();
        let clipped = ratio.clamp(1.0 - cfg.clip, 1.0 + cfg.clip);
        let (surr, d_logp) = if ratio * a <= clipped * a { (ratio * a, -a * ratio) } else { (clipped * a, 0.0) };
        let v = f.value[n];
        let dv = v - mb.returns[n];
        let cat_entropy: f64 = -probs.iter().zip(&lsm).map(|(p, l)| p * l).sum::<f64>();
        let entropy = gauss_entropy + cat_entropy;

        parts.policy += -surr / norm;
        parts.value += dv * dv / norm;
        parts.entropy += entropy / norm;

        if want_grad {
            let d_logp = d_logp / norm;
            for k in 0..nc {
                let var = (2.0 * ls[k]).exp();
                g.mean[n * nc + k] = d_logp * (raw[k] - mean[k]) / var;
                g.log_std[k] += d_logp * (z2[k] - 1.0) - cfg.entropy_coef / norm;
            }
            for j in 0..nd {
                let ind = if j == mb.gesture[n] { 1.0 } else { 0.0 };
                let d_ent = -probs[j] * (lsm[j] + cat_entropy);
                g.logits[n * nd + j] = d_logp * (ind - probs[j]) - cfg.entropy_coef * d_ent / norm;
            }
            g.value[n] = cfg.value_coef * 2.0 * dv / norm;
        }
    }
    parts.total = parts.policy + cfg.value_coef * parts.value - cfg.entropy_coef * parts.entropy;
    let grad = want_grad.then(|| net.backward(&f, &g));
    (parts, grad)
}

pub fn ppo_loss(net: &PolicyNetwork, mb: &Minibatch, cfg: &PpoConfig) -> LossParts {
    loss_impl(net, mb, cfg, mb.len() as f64, false).0
}

pub fn ppo_loss_and_grad(net: &PolicyNetwork, mb: &Minibatch, cfg: &PpoConfig) -> (LossParts, Vec<f64>) {
    let (p, g) = loss_impl(net, mb, cfg, mb.len() as f64, true);
    (p, g.expect("gradient requested"))
}

/// Same as [`ppo_loss_and_grad`], evaluating fixed-size chunks in parallel
/// and summing them in chunk order so results do not depend on threads.
fn parallel_loss_and_grad(net: &PolicyNetwork, mb: &Minibatch, cfg: &PpoConfig) -> (LossParts, Vec<f64>) {
    const CHUNK: usize = 32;
    let n = mb.len();
    let idx: Vec<usize> = (0..n).collect();
    let chunks: Vec<Minibatch> = idx.chunks(CHUNK).map(|c| mb.select(c, net.obs_dim, net.n_cont)).collect();
    let results: Vec<(LossParts, Vec<f64>)> = chunks
        .par_iter()
        .map(|c| {
            let (p, g) = loss_impl(net, c, cfg, n as f64, true);
            (p, g.expect("gradient requested"))
        })
        .collect();
    let mut total = LossParts::default();
    let mut grad = vec![0.0; net.param_count()];
    for (p, g) in results {
        total.total += p.total;
        total.policy += p.policy;
        total.value += p.value;
        total.entropy += p.entropy;
        for (a, b) in grad.iter_mut().zip(&g) {
            *a += b;
        }
    }
    (total, grad)
}

struct Worker {
    env: CorridorEnv,
    rng: SimRng,
    obs: Vec<f64>,
    episode_reward: f64,
    episode_len: usize,
}

#[derive(Default)]
struct Rollout {
    obs: Vec<f64>,
    raw: Vec<f64>,
    gesture: Vec<usize>,
    logp: Vec<f64>,
    value: Vec<f64>,
    reward: Vec<f64>,
    /// Episode ended here (terminal or truncated).
    done: Vec<bool>,
    /// Value of the state after this step when the episode was truncated.
    bootstrap: Vec<f64>,
}

/// Trains with clipped-surrogate PPO and GAE over `cfg.n_envs` corridor
/// environments. Each environment draws from its own RNG stream derived
/// from the seed, so results do not depend on thread scheduling.
pub fn ppo_train(
    env_config: &EnvConfig,
    policy: &PolicyNetwork,
    cfg: &PpoConfig,
) -> Result<(PolicyNetwork, Vec<IterationStats>), AgentError> {
    cfg.validate()?;
    let mut net = policy.clone();
    let mut stats = Vec::new();
    if cfg.total_steps == 0 {
        return Ok((net, stats));
    }
    if !net.is_finite() {
        return Err(AgentError::DivergenceDetected { iteration: 0 });
    }
    let mut workers: Vec<Worker> = (0..cfg.n_envs)
        .map(|i| {
            let mut env = CorridorEnv::new(env_config.clone())?;
            let mut r = rng::stream(cfg.seed, i as u64 + 1);
            let obs = env.reset_with(&mut r);
            Ok(Worker { env, rng: r, obs, episode_reward: 0.0, episode_len: 0 })
        })
        .collect::<Result<_, AgentError>>()?;
    let mut learner_rng = rng::stream(cfg.seed, 0);
    let mut opt = Adam::new(net.param_count(), cfg.learning_rate);
    let obs_dim = net.obs_dim;
    let nc = net.n_cont;
    let mut steps = 0;
    let mut iteration = 0;

    while steps < cfg.total_steps {
        let horizon = cfg.horizon.min((cfg.total_steps - steps).div_ceil(cfg.n_envs));
        let mut per_env: Vec<Rollout> = (0..cfg.n_envs).map(|_| Rollout::default()).collect();
        let mut finished: Vec<(f64, usize, usize)> = Vec::new();
        for _ in 0..horizon {
            let net_ref = &net;
            let outcomes: Vec<_> = workers
                .par_iter_mut()
                .map(|w| {
                    let s = net_ref.sample(&w.obs, &mut w.rng);
                    let r = w.env.step(s.action()).expect("env running");
                    w.episode_reward += r.reward;
                    w.episode_len += 1;
                    let prev_obs = std::mem::replace(&mut w.obs, r.obs.clone());
                    let mut ended = None;
                    let mut bootstrap = 0.0;
                    if r.done {
                        let exited = w.env.zones_entered() == w.env.config.layout.zones.len()
                            && w.env.position().is_some_and(|p| p.x >= w.env.config.layout.exit_x);
                        if !exited {
                            bootstrap = net_ref.value(&r.obs);
                        }
                        ended = Some((w.episode_reward, w.episode_len, w.env.zones_entered()));
                        w.obs = w.env.reset_with(&mut w.rng);
                        w.episode_reward = 0.0;
                        w.episode_len = 0;
                    }
                    (prev_obs, s, r.reward, r.done, bootstrap, ended)
                })
                .collect();
            for (i, (o, s, reward, done, bootstrap, ended)) in outcomes.into_iter().enumerate() {
                let ro = &mut per_env[i];
                ro.obs.extend_from_slice(&o);
                ro.raw.extend_from_slice(&s.raw);
                ro.gesture.push(s.gesture);
                ro.logp.push(s.logp);
                ro.value.push(s.value);
                ro.reward.push(reward * cfg.reward_scale);
                ro.done.push(done);
                ro.bootstrap.push(bootstrap);
                if let Some(e) = ended {
                    finished.push(e);
                }
            }
        }
        steps += horizon * cfg.n_envs;

        let mut batch = Minibatch {
            obs: Vec::new(),
            raw: Vec::new(),
            gesture: Vec::new(),
            old_logp: Vec::new(),
            advantage: Vec::new(),
            returns: Vec::new(),
        };
        for (w, ro) in workers.iter().zip(&per_env) {
            let last_value = net.value(&w.obs);
            let t_len = ro.reward.len();
            let mut adv = vec![0.0; t_len];
            let mut next_adv = 0.0;
            for t in (0..t_len).rev() {
                let next_value = if ro.done[t] {
                    ro.bootstrap[t]
                } else if t + 1 < t_len {
                    ro.value[t + 1]
                } else {
                    last_value
                };
                let delta = ro.reward[t] + cfg.gamma * next_value - ro.value[t];
                let carry = if ro.done[t] { 0.0 } else { cfg.gamma * cfg.gae_lambda * next_adv };
                adv[t] = delta + carry;
                next_adv = adv[t];
            }
            batch.obs.extend_from_slice(&ro.obs);
            batch.raw.extend_from_slice(&ro.raw);
            batch.gesture.extend_from_slice(&ro.gesture);
            batch.old_logp.extend_from_slice(&ro.logp);
            batch.returns.extend(adv.iter().zip(&ro.value).map(|(a, v)| a + v));
            batch.advantage.extend(adv);
        }
        let n = batch.len();
        let mean = batch.advantage.iter().sum::<f64>() / n as f64;
        let var = batch.advantage.iter().map(|a| (a - mean) * (a - mean)).sum::<f64>() / n as f64;
        let std = var.sqrt() + 1e-8;
        batch.advantage.iter_mut().for_each(|a| *a = (*a - mean) / std);

        let mut last = LossParts::default();
        let mut order: Vec<usize> = (0..n).collect();
        for _ in 0..cfg.epochs {
            order.shuffle(&mut learner_rng);
            for idx in order.chunks(cfg.minibatch) {
                let mb = batch.select(idx, obs_dim, nc);
                let (parts, mut grad) = parallel_loss_and_grad(&net, &mb, cfg);
                if !parts.total.is_finite() || grad.iter().any(|g| !g.is_finite()) {
                    return Err(AgentError::DivergenceDetected { iteration });
                }
                clip_grad_norm(&mut grad, cfg.max_grad_norm);
                opt.step(&mut net.params, &grad);
                last = parts;
            }
        }
        if !net.is_finite() {
            return Err(AgentError::DivergenceDetected { iteration });
        }

        let episodes = finished.len();
        let mean_of = |f: &dyn Fn(&(f64, usize, usize)) -> f64| {
            (episodes > 0).then(|| finished.iter().map(f).sum::<f64>() / episodes as f64)
        };
        stats.push(IterationStats {
            iteration,
            steps,
            episodes,
            mean_reward: mean_of(&|e| e.0),
            mean_length: mean_of(&|e| e.1 as f64),
            mean_zones: mean_of(&|e| e.2 as f64),
            policy_loss: last.policy,
            value_loss: last.value,
            entropy: last.entropy,
        });
        iteration += 1;
    }
    Ok((net, stats))
}

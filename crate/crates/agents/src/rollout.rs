use arstage_core::rng::{self, SimRng};
use arstage_core::stage::{EventKind, StageEvent};
use arstage_core::trace::LocomotionTrace;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::demos::ScriptedExpert;
use crate::env::{AgentAction, CorridorEnv, EnvConfig, GESTURE_COUNT};
use crate::net::PolicyNetwork;
use crate::AgentError;

/// Chooses actions for one agent.
pub trait Controller {
    fn act(&mut self, env: &CorridorEnv, obs: &[f64], rng: &mut SimRng) -> AgentAction;

    /// Called at the start of every episode.
    fn reset(&mut self) {}
}

/// Drives an agent from a policy network, either with sampled actions or
/// with the mean action and most likely gesture.
#[derive(Debug, Clone)]
pub struct PolicyController<'a> {
    pub net: &'a PolicyNetwork,
    pub deterministic: bool,
}

impl Controller for PolicyController<'_> {
    fn act(&mut self, _env: &CorridorEnv, obs: &[f64], rng: &mut SimRng) -> AgentAction {
        if self.deterministic {
            self.net.act_deterministic(obs)
        } else {
            self.net.sample(obs, rng).action()
        }
    }
}

/// Uniform random actions over the full action box.
#[derive(Debug, Clone, Copy, Default)]
pub struct UniformRandom;

impl Controller for UniformRandom {
    fn act(&mut self, _env: &CorridorEnv, _obs: &[f64], rng: &mut SimRng) -> AgentAction {
        AgentAction::new(rng.random_range(0.0..=1.0), rng.random_range(-1.0..=1.0), rng.random_range(0..GESTURE_COUNT))
    }
}

impl Controller for ScriptedExpert {
    fn act(&mut self, env: &CorridorEnv, _obs: &[f64], _rng: &mut SimRng) -> AgentAction {
        ScriptedExpert::act(self, env)
    }

    fn reset(&mut self) {
        ScriptedExpert::reset(self);
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RolloutEpisode {
    pub seed: u64,
    pub trace: LocomotionTrace,
    /// Zone entries as trigger events, closed by a PlayEnded marker.
    pub events: Vec<StageEvent>,
    pub reward: f64,
    pub zones_entered: usize,
    pub entry_order: Vec<usize>,
    pub steps: usize,
}

/// Per-episode spawn seed and action stream for episode `i` of a run.
fn episode_streams(seed: u64, i: usize) -> (u64, SimRng) {
    (rng::derive_seed(seed, i as u64), rng::stream(seed, i as u64 + 1))
}

fn run_episode(
    controller: &mut dyn Controller,
    env: &mut CorridorEnv,
    spawn_seed: u64,
    r: &mut SimRng,
) -> Result<RolloutEpisode, AgentError> {
    controller.reset();
    let mut obs = env.reset(spawn_seed);
    let mut reward = 0.0;
    let mut events = Vec::new();
    let mut steps = 0;
    while env.is_running() {
        let a = controller.act(env, &obs, r);
        let s = env.step(a)?;
        steps += 1;
        reward += s.reward;
        if let Some(z) = s.entered {
            let subject = env.config.layout.zones[z].id.clone();
            events.push(StageEvent { time: env.time(), kind: EventKind::TriggerFired, subject });
        }
        obs = s.obs;
    }
    events.push(StageEvent { time: env.time(), kind: EventKind::PlayEnded, subject: "episode".into() });
    Ok(RolloutEpisode {
        seed: spawn_seed,
        trace: env.trace().clone(),
        events,
        reward,
        zones_entered: env.zones_entered(),
        entry_order: env.entry_order().to_vec(),
        steps,
    })
}

/// Runs `episodes` episodes one after another. Episode `i` spawns from a
/// seed derived from `seed` and `i` and draws actions from its own stream.
pub fn rollout(
    controller: &mut dyn Controller,
    config: &EnvConfig,
    episodes: usize,
    seed: u64,
) -> Result<Vec<RolloutEpisode>, AgentError> {
    let mut env = CorridorEnv::new(config.clone())?;
    (0..episodes)
        .map(|i| {
            let (spawn, mut r) = episode_streams(seed, i);
            run_episode(controller, &mut env, spawn, &mut r)
        })
        .collect()
}

/// Several agents sharing one policy in the same corridor. Agents do not
/// collide and advance on a shared clock, each on its own thread-free RNG
/// stream, so the result matches running them one by one.
pub fn rollout_shared(
    net: &PolicyNetwork,
    config: &EnvConfig,
    agents: usize,
    seed: u64,
    deterministic: bool,
) -> Result<Vec<RolloutEpisode>, AgentError> {
    (0..agents)
        .into_par_iter()
        .map(|i| {
            let mut env = CorridorEnv::new(config.clone())?;
            let (spawn, mut r) = episode_streams(seed, i);
            let mut c = PolicyController { net, deterministic };
            run_episode(&mut c, &mut env, spawn, &mut r)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RolloutSummary {
    pub episodes: usize,
    pub mean_reward: f64,
    pub mean_zones: f64,
    pub median_zones: f64,
    pub all_zones_fraction: f64,
    pub mean_steps: f64,
}

pub fn summarize(episodes: &[RolloutEpisode], zone_count: usize) -> RolloutSummary {
    let n = episodes.len().max(1) as f64;
    let mut zones: Vec<usize> = episodes.iter().map(|e| e.zones_entered).collect();
    zones.sort_unstable();
    let median_zones = match zones.len() {
        0 => 0.0,
        l if l % 2 == 1 => zones[l / 2] as f64,
        l => (zones[l / 2 - 1] + zones[l / 2]) as f64 / 2.0,
    };
    RolloutSummary {
        episodes: episodes.len(),
        mean_reward: episodes.iter().map(|e| e.reward).sum::<f64>() / n,
        mean_zones: zones.iter().sum::<usize>() as f64 / n,
        median_zones,
        all_zones_fraction: episodes.iter().filter(|e| e.zones_entered == zone_count).count() as f64 / n,
        mean_steps: episodes.iter().map(|e| e.steps as f64).sum::<f64>() / n,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn random_rollouts_stay_inside() {
        let cfg = EnvConfig::default();
        let eps = rollout(&mut UniformRandom, &cfg, 10, 3).unwrap();
        assert_eq!(eps.len(), 10);
        let b = cfg.layout.bounds();
        for e in &eps {
            assert!(e.trace.samples().iter().all(|s| b.contains(s.position)));
            assert_eq!(e.events.last().unwrap().kind, EventKind::PlayEnded);
        }
    }

    #[test]
    fn shared_policy_agents_are_distinct() {
        let net = PolicyNetwork::new(1);
        let eps = rollout_shared(&net, &EnvConfig::default(), 6, 9, false).unwrap();
        for i in 0..6 {
            for j in i + 1..6 {
                assert_ne!(eps[i].trace, eps[j].trace);
            }
        }
        let mut c = PolicyController { net: &net, deterministic: false };
        let seq = rollout(&mut c, &EnvConfig::default(), 6, 9).unwrap();
        assert_eq!(seq, eps);
    }
}

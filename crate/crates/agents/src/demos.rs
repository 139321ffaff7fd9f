use arstage_core::geom::{wrap_angle, Vec2};
use arstage_core::trace::LocomotionTrace;
use serde::{Deserialize, Serialize};

use crate::env::{AgentAction, CorridorEnv, EnvConfig};
use crate::AgentError;

/// Observation/action pairs from one demonstration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DemoEpisode {
    pub observations: Vec<Vec<f64>>,
    pub actions: Vec<AgentAction>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DemonstrationSet {
    pub episodes: Vec<DemoEpisode>,
}

impl DemonstrationSet {
    pub fn len(&self) -> usize {
        self.episodes.iter().map(|e| e.actions.len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Replays each trace through a corridor environment, reconstructing
    /// speed and turn by finite differences of consecutive poses. After each
    /// step the agent is put back on the recorded pose so observations match
    /// the trace. Gestures are not recorded and default to 0.
    pub fn from_traces(traces: &[LocomotionTrace], config: &EnvConfig) -> Result<Self, AgentError> {
        let mut env = CorridorEnv::new(config.clone())?;
        let mut episodes = Vec::new();
        for trace in traces {
            let s = trace.samples();
            if s.len() < 2 {
                continue;
            }
            let mut obs = env.reset_to(s[0].position, s[0].heading);
            let mut ep = DemoEpisode { observations: Vec::new(), actions: Vec::new() };
            for w in s.windows(2) {
                let dt = w[1].t - w[0].t;
                let action = reconstruct_action(w[0].position, w[0].heading, w[1].position, w[1].heading, dt, config);
                ep.observations.push(obs);
                ep.actions.push(action);
                let r = env.step_dt(action, dt)?;
                if r.done {
                    break;
                }
                obs = env.set_pose(w[1].position, w[1].heading)?;
            }
            episodes.push(ep);
        }
        Ok(Self { episodes })
    }
}

/// Normalized action taking pose `a` to pose `b` over `dt`, clamped to the
/// action limits.
pub fn reconstruct_action(a: Vec2, ha: f64, b: Vec2, hb: f64, dt: f64, config: &EnvConfig) -> AgentAction {
    let forward = a.distance(b) / (config.max_speed * dt);
    let turn = wrap_angle(hb - ha) / (config.max_turn_deg.to_radians() * dt);
    AgentAction::new(forward, turn, 0).clamped()
}

/// Steers toward the nearest unvisited zone, lingers there, then walks out
/// the corridor end.
#[derive(Debug, Clone, PartialEq)]
pub struct ScriptedExpert {
    /// Seconds spent standing in each zone after entering it.
    pub linger: f64,
    lingered: f64,
    last_entered: usize,
}

impl ScriptedExpert {
    pub fn new(linger: f64) -> Self {
        Self { linger, lingered: 0.0, last_entered: 0 }
    }

    pub fn reset(&mut self) {
        self.lingered = 0.0;
        self.last_entered = 0;
    }

    pub fn act(&mut self, env: &CorridorEnv) -> AgentAction {
        let cfg = &env.config;
        let (Some(p), Some(h)) = (env.position(), env.heading()) else {
            return AgentAction::new(0.0, 0.0, 0);
        };
        let entered = env.entry_order();
        if entered.len() != self.last_entered {
            self.last_entered = entered.len();
            self.lingered = 0.0;
        }
        if !entered.is_empty() && self.lingered < self.linger {
            self.lingered += cfg.dt;
            return AgentAction::new(0.0, 0.0, 1);
        }
        let layout = &cfg.layout;
        let target = layout
            .zones
            .iter()
            .enumerate()
            .filter(|(z, _)| !entered.contains(z))
            .min_by(|a, b| p.distance(a.1.center).total_cmp(&p.distance(b.1.center)))
            .map(|(_, zone)| zone.center)
            .unwrap_or(Vec2::new(layout.length, layout.width / 2.0));
        let err = wrap_angle((target - p).angle() - h);
        let turn = err / (cfg.max_turn_deg.to_radians() * cfg.dt);
        let forward = if err.abs() < std::f64::consts::FRAC_PI_2 { err.cos() } else { 0.0 };
        AgentAction::new(forward, turn, 0).clamped()
    }

    /// Runs the expert from a seeded spawn and returns its trace.
    pub fn demonstrate(&mut self, config: &EnvConfig, seed: u64) -> Result<LocomotionTrace, AgentError> {
        let mut env = CorridorEnv::new(config.clone())?;
        env.reset(seed);
        self.reset();
        while env.is_running() {
            let a = self.act(&env);
            env.step(a)?;
        }
        Ok(env.trace().clone())
    }
}

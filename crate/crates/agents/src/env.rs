use arstage_core::geom::wrap_angle;
use arstage_core::rng::{self, SimRng};
use arstage_core::twin::OcclusionScene;
use arstage_core::{Aabb2, LocomotionTrace, TraceSample, Vec2};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::reward::{RewardBreakdown, RewardConfig};
use crate::AgentError;

/// Observation length: position 2, heading sin/cos 2, rays 12, zones 3×3,
/// time in zone 1, all-zones flag 1.
pub const OBS_DIM: usize = 27;
pub const RAY_COUNT: usize = 12;
pub const GESTURE_COUNT: usize = 4;
/// Slack on the wall-contact test.
pub const CONTACT_EPS: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AgentZone {
    pub id: String,
    pub center: Vec2,
    pub radius: f64,
}

/// A straight walled corridor with three content zones along its axis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorridorLayout {
    pub length: f64,
    pub width: f64,
    /// Ticket booth: the spawn disc center.
    pub booth: Vec2,
    pub spawn_radius: f64,
    pub zones: Vec<AgentZone>,
    /// The episode can end once every zone is entered and `x >= exit_x`.
    pub exit_x: f64,
}

impl CorridorLayout {
    /// 20 m × 4 m corridor, zones of 2.8 m² centered 6 m apart on the
    /// midline, booth near the entrance.
    pub fn simplified() -> Self {
        let radius = arstage_core::stage::default_zone_radius();
        let zones = [6.0, 12.0, 18.0]
            .iter()
            .enumerate()
            .map(|(i, &x)| AgentZone { id: format!("zone-{}", i + 1), center: Vec2::new(x, 2.0), radius })
            .collect();
        Self { length: 20.0, width: 4.0, booth: Vec2::new(2.0, 2.0), spawn_radius: 1.5, zones, exit_x: 19.0 }
    }

    pub fn bounds(&self) -> Aabb2 {
        Aabb2::new(Vec2::ZERO, Vec2::new(self.length, self.width))
    }

    pub fn scene(&self) -> Result<OcclusionScene, AgentError> {
        OcclusionScene::new(Vec::new(), Vec::new(), self.bounds()).map_err(|e| AgentError::InvalidScene(e.to_string()))
    }

    pub fn validate(&self, agent_radius: f64) -> Result<(), AgentError> {
        let bad = |m: &str| Err(AgentError::InvalidScene(m.into()));
        if !(self.length > 2.0 * agent_radius && self.width > 2.0 * agent_radius) {
            return bad("corridor narrower than the agent");
        }
        if self.zones.len() != 3 {
            return bad("the observation layout expects exactly three zones");
        }
        let inner = Aabb2::new(Vec2::new(agent_radius, agent_radius), Vec2::new(self.length - agent_radius, self.width - agent_radius));
        if !inner.contains(self.booth) {
            return bad("booth outside the walkable corridor");
        }
        if !self.zones.iter().all(|z| z.radius > 0.0 && self.bounds().contains(z.center)) {
            return bad("zone outside corridor");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EnvConfig {
    pub layout: CorridorLayout,
    pub rewards: RewardConfig,
    /// Decision interval, seconds.
    pub dt: f64,
    pub episode_seconds: f64,
    pub agent_radius: f64,
    /// m/s at forward = 1.
    pub max_speed: f64,
    /// deg/s at turn = ±1.
    pub max_turn_deg: f64,
    /// Initial heading is uniform within this many degrees of +x.
    pub spawn_heading_spread_deg: f64,
}

impl Default for EnvConfig {
    fn default() -> Self {
        Self {
            layout: CorridorLayout::simplified(),
            rewards: RewardConfig::default(),
            dt: 0.2,
            episode_seconds: 90.0,
            agent_radius: 0.3,
            max_speed: 1.4,
            max_turn_deg: 120.0,
            spawn_heading_spread_deg: 90.0,
        }
    }
}

impl EnvConfig {
    pub fn max_steps(&self) -> usize {
        (self.episode_seconds / self.dt).round() as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AgentAction {
    /// Fraction of max speed, clamped to [0, 1].
    pub forward: f64,
    /// Fraction of max turn rate, clamped to [-1, 1]; positive is counter-clockwise.
    pub turn: f64,
    /// Idle gesture id in 0..4.
    pub gesture: usize,
}

impl AgentAction {
    pub fn new(forward: f64, turn: f64, gesture: usize) -> Self {
        Self { forward, turn, gesture }
    }

    pub fn clamped(&self) -> Self {
        Self {
            forward: self.forward.clamp(0.0, 1.0),
            turn: self.turn.clamp(-1.0, 1.0),
            gesture: self.gesture.min(GESTURE_COUNT - 1),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepResult {
    pub obs: Vec<f64>,
    pub reward: f64,
    pub done: bool,
    pub breakdown: RewardBreakdown,
    /// Zone index entered during this step.
    pub entered: Option<usize>,
}

#[derive(Debug, Clone)]
struct EpisodeState {
    position: Vec2,
    heading: f64,
    gesture: usize,
    steps: usize,
    t: f64,
    entered: Vec<bool>,
    entry_order: Vec<usize>,
    stay: Vec<f64>,
    bonus_given: bool,
    done: bool,
    wall_contact: bool,
}

/// One agent in the corridor.
#[derive(Debug, Clone)]
pub struct CorridorEnv {
    pub config: EnvConfig,
    scene: OcclusionScene,
    state: Option<EpisodeState>,
    trace: LocomotionTrace,
}

impl CorridorEnv {
    pub fn new(config: EnvConfig) -> Result<Self, AgentError> {
        config.layout.validate(config.agent_radius)?;
        config.rewards.validate(config.layout.zones.len()).map_err(AgentError::InvalidConfig)?;
        if !(config.dt > 0.0 && config.episode_seconds > 0.0 && config.max_speed > 0.0) {
            return Err(AgentError::InvalidConfig("dt, episode length and speed must be positive".into()));
        }
        let scene = config.layout.scene()?;
        Ok(Self { config, scene, state: None, trace: LocomotionTrace::default() })
    }

    /// Places the agent uniformly in the spawn disc around the booth.
    pub fn reset(&mut self, seed: u64) -> Vec<f64> {
        let mut r = rng::seeded(seed);
        self.reset_with(&mut r)
    }

    pub fn reset_with(&mut self, r: &mut SimRng) -> Vec<f64> {
        let l = &self.config.layout;
        let position = loop {
            let p = l.booth
                + Vec2::new(r.random_range(-1.0..=1.0), r.random_range(-1.0..=1.0)) * l.spawn_radius;
            if p.distance(l.booth) <= l.spawn_radius
                && self.scene.point_in_walkable(p)
                && self.scene.clearance(p) >= self.config.agent_radius
            {
                break p;
            }
        };
        let spread = self.config.spawn_heading_spread_deg.to_radians();
        let heading = if spread > 0.0 { r.random_range(-spread..=spread) } else { 0.0 };
        self.reset_to(position, heading)
    }

    /// Starts an episode at an explicit pose.
    pub fn reset_to(&mut self, position: Vec2, heading: f64) -> Vec<f64> {
        let n = self.config.layout.zones.len();
        self.state = Some(EpisodeState {
            position,
            heading: wrap_angle(heading),
            gesture: 0,
            steps: 0,
            t: 0.0,
            entered: vec![false; n],
            entry_order: Vec::new(),
            stay: vec![0.0; n],
            bonus_given: false,
            done: false,
            wall_contact: false,
        });
        self.trace = LocomotionTrace::default();
        self.trace.push(TraceSample { t: 0.0, position, heading: wrap_angle(heading) }).expect("first sample");
        self.observe()
    }

    /// Moves the agent to a pose mid-episode, keeping zone progress, and
    /// returns the new observation.
    pub fn set_pose(&mut self, position: Vec2, heading: f64) -> Result<Vec<f64>, AgentError> {
        let st = self.state.as_mut().ok_or(AgentError::StepBeforeReset)?;
        st.position = position;
        st.heading = wrap_angle(heading);
        Ok(self.observe())
    }

    pub fn is_running(&self) -> bool {
        self.state.as_ref().is_some_and(|s| !s.done)
    }

    pub fn position(&self) -> Option<Vec2> {
        self.state.as_ref().map(|s| s.position)
    }

    pub fn heading(&self) -> Option<f64> {
        self.state.as_ref().map(|s| s.heading)
    }

    pub fn time(&self) -> f64 {
        self.state.as_ref().map_or(0.0, |s| s.t)
    }

    pub fn entry_order(&self) -> &[usize] {
        self.state.as_ref().map_or(&[], |s| &s.entry_order)
    }

    pub fn zones_entered(&self) -> usize {
        self.entry_order().len()
    }

    pub fn gesture(&self) -> usize {
        self.state.as_ref().map_or(0, |s| s.gesture)
    }

    pub fn trace(&self) -> &LocomotionTrace {
        &self.trace
    }

    /// Advances one decision interval of the configured length.
    pub fn step(&mut self, action: AgentAction) -> Result<StepResult, AgentError> {
        let dt = self.config.dt;
        self.step_dt(action, dt)
    }

    /// Kinematic update: turn, then move along the new heading, sliding
    /// along the corridor walls. Rewards are judged at the end position.
    pub fn step_dt(&mut self, action: AgentAction, dt: f64) -> Result<StepResult, AgentError> {
        let cfg = &self.config;
        let layout = &cfg.layout;
        let radius = cfg.agent_radius;
        let st = self.state.as_mut().ok_or(AgentError::StepBeforeReset)?;
        if st.done {
            return Err(AgentError::StepBeforeReset);
        }
        let a = action.clamped();
        st.gesture = a.gesture;
        st.heading = wrap_angle(st.heading + a.turn * cfg.max_turn_deg.to_radians() * dt);
        let proposed = st.position + Vec2::from_angle(st.heading) * (a.forward * cfg.max_speed * dt);
        let slid = Vec2::new(
            proposed.x.clamp(radius, layout.length - radius),
            proposed.y.clamp(radius, layout.width - radius),
        );
        if self.scene.clearance(slid) >= radius - 1e-9 {
            st.position = slid;
        }
        st.steps += 1;
        st.t = st.steps as f64 * dt;
        let p = st.position;

        let rw = &cfg.rewards;
        let mut b = RewardBreakdown::default();
        let mut entered = None;
        for (z, zone) in layout.zones.iter().enumerate() {
            if !st.entered[z] && p.distance(zone.center) <= zone.radius {
                st.entered[z] = true;
                b.entry += rw.entry_reward(z, st.entry_order.len());
                st.entry_order.push(z);
                entered = Some(z);
            }
        }
        if !st.bonus_given && st.entry_order.len() == layout.zones.len() {
            st.bonus_given = true;
            b.bonus = rw.all_zones_bonus;
        }
        for (z, zone) in layout.zones.iter().enumerate() {
            if st.entered[z] && p.distance(zone.center) <= zone.radius {
                let add = dt.min(rw.staying_cap - st.stay[z]).max(0.0);
                st.stay[z] += add;
                b.staying += add * rw.staying_rate;
            }
        }
        let near = layout
            .zones
            .iter()
            .enumerate()
            .any(|(z, zone)| !st.entered[z] && p.distance(zone.center) <= rw.proximity_radius);
        if near {
            b.proximity = rw.proximity_rate * dt;
        }
        st.wall_contact = self.scene.clearance(p) <= radius + CONTACT_EPS;
        if st.wall_contact {
            b.wall = rw.wall_contact_rate * dt;
        }

        let finished = st.entry_order.len() == layout.zones.len() && p.x >= layout.exit_x;
        st.done = finished || st.steps >= cfg.max_steps();
        let done = st.done;
        let (t, heading) = (st.t, st.heading);
        self.trace.push(TraceSample { t, position: p, heading }).expect("time increases");
        Ok(StepResult { obs: self.observe(), reward: b.total(), done, breakdown: b, entered })
    }

    /// Observation for the current state; zeros before the first reset.
    pub fn observe(&self) -> Vec<f64> {
        let mut o = Vec::with_capacity(OBS_DIM);
        let Some(st) = &self.state else { return vec![0.0; OBS_DIM] };
        let l = &self.config.layout;
        let p = st.position;
        o.push((2.0 * p.x / l.length - 1.0).clamp(-1.0, 1.0));
        o.push((2.0 * p.y / l.width - 1.0).clamp(-1.0, 1.0));
        o.push(st.heading.sin());
        o.push(st.heading.cos());
        let range = l.length.max(l.width);
        for k in 0..RAY_COUNT {
            let dir = Vec2::from_angle(st.heading + k as f64 * std::f64::consts::TAU / RAY_COUNT as f64);
            let d = self.scene.raycast(p, dir, range).ok().flatten().unwrap_or(range);
            o.push((d / range).clamp(0.0, 1.0));
        }
        let (s, c) = st.heading.sin_cos();
        for (z, zone) in l.zones.iter().enumerate() {
            let rel = zone.center - p;
            // Agent frame: x forward, y left.
            let fx = rel.x * c + rel.y * s;
            let fy = -rel.x * s + rel.y * c;
            o.push((fx / range).clamp(-1.0, 1.0));
            o.push((fy / range).clamp(-1.0, 1.0));
            o.push(if st.entered[z] { 1.0 } else { 0.0 });
        }
        let current = l.zones.iter().position(|z| p.distance(z.center) <= z.radius);
        let cap = self.config.rewards.staying_cap;
        o.push(current.map_or(0.0, |z| (st.stay[z] / cap).clamp(0.0, 1.0)));
        o.push(if st.entry_order.len() == l.zones.len() { 1.0 } else { 0.0 });
        o
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn env() -> CorridorEnv {
        CorridorEnv::new(EnvConfig::default()).unwrap()
    }

    #[test]
    fn same_seed_same_spawn() {
        let mut a = env();
        let mut b = env();
        assert_eq!(a.reset(5), b.reset(5));
        assert_eq!(a.position(), b.position());
    }

    #[test]
    fn step_before_reset_rejected() {
        assert!(matches!(env().step(AgentAction::new(1.0, 0.0, 0)), Err(AgentError::StepBeforeReset)));
    }

    #[test]
    fn observation_is_normalized() {
        let mut e = env();
        let mut o = e.reset(1);
        for k in 0..300 {
            assert_eq!(o.len(), OBS_DIM);
            assert!(o.iter().all(|v| (-1.0..=1.0).contains(v)));
            let r = e.step(AgentAction::new(1.0, if k % 40 < 20 { 0.3 } else { -0.5 }, k % 4)).unwrap();
            o = r.obs;
            if r.done {
                break;
            }
        }
    }

    #[test]
    fn first_zone_entry_pays_48_2() {
        let mut e = env();
        e.reset_to(Vec2::new(4.5, 2.0), 0.0);
        let mut got = None;
        for _ in 0..20 {
            let r = e.step(AgentAction::new(1.0, 0.0, 0)).unwrap();
            if r.entered.is_some() {
                got = Some(r.breakdown.entry);
                break;
            }
        }
        assert_eq!(got, Some(48.2));
    }

    #[test]
    fn pressing_on_a_wall_for_one_second() {
        let mut e = env();
        e.reset_to(Vec2::new(3.0, 0.3), -std::f64::consts::FRAC_PI_2);
        let mut wall = 0.0;
        for _ in 0..5 {
            wall += e.step(AgentAction::new(1.0, 0.0, 0)).unwrap().breakdown.wall;
        }
        assert!((wall + 0.01).abs() < 1e-12);
    }

    #[test]
    fn staying_pays_at_most_seventeen_seconds() {
        let mut e = env();
        e.reset_to(Vec2::new(6.0, 2.0), 0.0);
        let mut staying = 0.0;
        for _ in 0..100 {
            staying += e.step(AgentAction::new(0.0, 0.0, 0)).unwrap().breakdown.staying;
        }
        assert!((staying - 17.0).abs() < 1e-9);
    }
}

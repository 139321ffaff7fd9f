use arstage_core::{LocomotionTrace, Vec2};
use serde::{Deserialize, Serialize};

use crate::env::CorridorLayout;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RewardConfig {
    /// Reward for the first, second and third zone entered.
    pub zone_entry: Vec<f64>,
    pub all_zones_bonus: f64,
    /// Per second inside an entered zone.
    pub staying_rate: f64,
    /// Seconds of staying reward available per zone.
    pub staying_cap: f64,
    /// Per second while an unvisited zone is within `proximity_radius`.
    pub proximity_rate: f64,
    pub proximity_radius: f64,
    /// Per second of wall contact (negative).
    pub wall_contact_rate: f64,
    /// Key entry rewards by entry ordinal (true) or by zone index (false).
    pub entry_by_ordinal: bool,
}

impl Default for RewardConfig {
    fn default() -> Self {
        Self {
            zone_entry: vec![48.2, 63.7, 85.5],
            all_zones_bonus: 41.0,
            staying_rate: 1.0,
            staying_cap: 17.0,
            proximity_rate: 0.03,
            proximity_radius: 4.0,
            wall_contact_rate: -0.01,
            entry_by_ordinal: true,
        }
    }
}

impl RewardConfig {
    pub fn validate(&self, zones: usize) -> Result<(), String> {
        if self.zone_entry.len() != zones {
            return Err(format!("{} entry rewards for {zones} zones", self.zone_entry.len()));
        }
        if self.entry_by_ordinal && !self.zone_entry.windows(2).all(|w| w[0] < w[1]) {
            return Err("entry rewards must increase with ordinal".into());
        }
        if !(self.staying_cap > 0.0 && self.proximity_radius >= 0.0) {
            return Err("staying cap must be positive".into());
        }
        Ok(())
    }

    pub fn entry_reward(&self, zone: usize, ordinal: usize) -> f64 {
        self.zone_entry[if self.entry_by_ordinal { ordinal } else { zone }]
    }
}

/// Reward split by term.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct RewardBreakdown {
    pub entry: f64,
    pub bonus: f64,
    pub staying: f64,
    pub proximity: f64,
    pub wall: f64,
}

impl RewardBreakdown {
    pub fn total(&self) -> f64 {
        self.entry + self.bonus + self.staying + self.proximity + self.wall
    }

    pub fn add(&mut self, o: &RewardBreakdown) {
        self.entry += o.entry;
        self.bonus += o.bonus;
        self.staying += o.staying;
        self.proximity += o.proximity;
        self.wall += o.wall;
    }
}

/// Total reward of a trace, computed in closed form from the positions at
/// each sample. Sample `k > 0` closes the interval `(t[k-1], t[k]]` and is
/// judged by its end position, as the environment does:
///
/// - entry: zones ranked by the first sample inside them;
/// - staying: `min(time inside, cap) · rate` per entered zone;
/// - proximity: time during which some zone not yet entered (by the end of
///   the interval) has its center within the radius;
/// - wall: time the agent disc touches the corridor boundary.
pub fn episode_reward_oracle(
    trace: &LocomotionTrace,
    layout: &CorridorLayout,
    agent_radius: f64,
    config: &RewardConfig,
) -> RewardBreakdown {
    let s = trace.samples();
    let mut out = RewardBreakdown::default();
    if s.len() < 2 {
        return out;
    }
    let inside = |z: usize, p: Vec2| p.distance(layout.zones[z].center) <= layout.zones[z].radius;
    let first_entry: Vec<Option<usize>> = (0..layout.zones.len())
        .map(|z| (1..s.len()).find(|&k| inside(z, s[k].position)))
        .collect();

    let mut order: Vec<(usize, usize)> =
        first_entry.iter().enumerate().filter_map(|(z, k)| k.map(|k| (k, z))).collect();
    order.sort();
    for (ordinal, &(_, z)) in order.iter().enumerate() {
        out.entry += config.entry_reward(z, ordinal);
    }
    if order.len() == layout.zones.len() {
        out.bonus = config.all_zones_bonus;
    }

    for z in 0..layout.zones.len() {
        let time_inside: f64 = (1..s.len())
            .filter(|&k| first_entry[z].is_some_and(|e| k >= e) && inside(z, s[k].position))
            .map(|k| s[k].t - s[k - 1].t)
            .sum();
        out.staying += time_inside.min(config.staying_cap) * config.staying_rate;
    }

    for k in 1..s.len() {
        let dt = s[k].t - s[k - 1].t;
        let p = s[k].position;
        let near = (0..layout.zones.len()).any(|z| {
            let unvisited = first_entry[z].is_none_or(|e| e > k);
            unvisited && p.distance(layout.zones[z].center) <= config.proximity_radius
        });
        if near {
            out.proximity += config.proximity_rate * dt;
        }
        let edge = p.x.min(layout.length - p.x).min(p.y).min(layout.width - p.y);
        if edge <= agent_radius + crate::env::CONTACT_EPS {
            out.wall += config.wall_contact_rate * dt;
        }
    }
    out
}

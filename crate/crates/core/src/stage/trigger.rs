use serde::{Deserialize, Serialize};

use crate::geom::Vec2;

/// Invisible proximity trigger placed along a pathway.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocationTrigger {
    pub center: Vec2,
    #[serde(default = "default_radius")]
    pub radius: f64,
    #[serde(default = "yes")]
    pub one_shot: bool,
    pub payload: String,
}

fn default_radius() -> f64 {
    super::cue::TRIGGER_RADIUS
}

fn yes() -> bool {
    true
}

impl LocationTrigger {
    pub fn new(center: Vec2, payload: impl Into<String>) -> Self {
        Self { center, radius: default_radius(), one_shot: true, payload: payload.into() }
    }
}

/// Fires when the walker is within the closed radius, unless this is a
/// one-shot trigger that has already fired.
pub fn trigger_check(trigger: &LocationTrigger, position: Vec2, fired_before: bool) -> bool {
    position.distance(trigger.center) <= trigger.radius && !(trigger.one_shot && fired_before)
}

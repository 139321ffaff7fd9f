use std::path::{Path, PathBuf};

use arstage_agents::bc::BcConfig;
use arstage_agents::ppo::PpoConfig;
use arstage_agents::EnvConfig;
use arstage_core::bubbles::{PlaySpace, DEFAULT_ALTITUDE};
use arstage_core::distortion::{DistortionTreatment, RoomModel, TreatmentTimeline};
use arstage_core::Vec2;
use serde::{Deserialize, Serialize};

use crate::error::HarnessError;

pub const CONFIG_VERSION: u32 = 1;
/// Normal walking pace, m/s.
pub const WALK_SPEED: f64 = 1.4;
pub const MAX_WALKER_SPEED: f64 = 3.0;

fn walk_speed() -> f64 {
    WALK_SPEED
}

fn default_turn_noise() -> f64 {
    1.0
}

fn default_turn_rate() -> f64 {
    180.0
}

/// How the simulated participant moves.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum WalkerSpec {
    /// Walks the points in order at constant speed. An empty list in a
    /// theater scenario follows the cue sheet's zones and spirals.
    Waypoint {
        #[serde(default)]
        points: Vec<Vec2>,
        #[serde(default = "walk_speed")]
        speed: f64,
    },
    /// Constant-speed random walk; heading diffuses with `turn_noise`
    /// radians per square-root second.
    Wander {
        #[serde(default = "walk_speed")]
        speed: f64,
        #[serde(default = "default_turn_noise")]
        turn_noise: f64,
        #[serde(default)]
        start: Option<Vec2>,
    },
    /// Follows the active guidance aid toward the next target.
    Guided {
        #[serde(default = "walk_speed")]
        speed: f64,
        /// Degrees per second.
        #[serde(default = "default_turn_rate")]
        max_turn_rate: f64,
    },
    /// Drives a corridor agent from a saved policy checkpoint.
    Policy { checkpoint: PathBuf },
}

impl WalkerSpec {
    pub fn speed(&self) -> Option<f64> {
        match self {
            WalkerSpec::Waypoint { speed, .. } | WalkerSpec::Wander { speed, .. } | WalkerSpec::Guided { speed, .. } => {
                Some(*speed)
            }
            WalkerSpec::Policy { .. } => None,
        }
    }
}

fn default_episodes() -> usize {
    10
}

fn yes() -> bool {
    true
}

fn default_steps() -> usize {
    200_000
}

fn default_one() -> usize {
    1
}

fn default_keep() -> f64 {
    0.3
}

fn default_eval() -> usize {
    50
}

fn default_altitude() -> f64 {
    DEFAULT_ALTITUDE
}

/// Optional behavior-cloning warm start from scripted expert runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WarmStart {
    pub demo_episodes: usize,
    #[serde(default)]
    pub linger: f64,
    #[serde(default)]
    pub bc: BcConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ScenarioKind {
    /// A cue-sheet play in the corridor venue.
    Theater {
        #[serde(default)]
        cue_sheet: Option<PathBuf>,
    },
    /// One distortion trial in the physical room.
    Distortion {
        treatment: DistortionTreatment,
        #[serde(default)]
        room: RoomModel,
        #[serde(default)]
        timeline: Option<TreatmentTimeline>,
    },
    /// A bubble-instrument session inside the fenced play space.
    Bubbles {
        #[serde(default = "default_altitude")]
        altitude: f64,
        #[serde(default)]
        space: PlaySpace,
    },
    /// Evaluation episodes of a policy in the agent corridor. Without a
    /// policy walker the untrained network seeded from `seed` is used.
    Rollout {
        #[serde(default = "default_episodes")]
        episodes: usize,
        #[serde(default = "yes")]
        deterministic: bool,
        #[serde(default)]
        env: EnvConfig,
    },
    /// PPO training of one or more candidate policies, keeping the top
    /// fraction by evaluation reward.
    Train {
        #[serde(default = "default_steps")]
        steps: usize,
        #[serde(default)]
        ppo: PpoConfig,
        #[serde(default)]
        warm_start: Option<WarmStart>,
        #[serde(default = "default_one")]
        candidates: usize,
        #[serde(default = "default_keep")]
        keep_fraction: f64,
        #[serde(default = "default_eval")]
        eval_episodes: usize,
        #[serde(default)]
        env: EnvConfig,
    },
}

impl ScenarioKind {
    pub fn name(&self) -> &'static str {
        match self {
            ScenarioKind::Theater { .. } => "theater",
            ScenarioKind::Distortion { .. } => "distortion",
            ScenarioKind::Bubbles { .. } => "bubbles",
            ScenarioKind::Rollout { .. } => "rollout",
            ScenarioKind::Train { .. } => "train",
        }
    }
}

/// A complete scenario description. Relative paths are resolved against
/// the config file's directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub version: u32,
    pub name: String,
    pub seed: u64,
    /// Simulation step, seconds.
    pub dt: f64,
    /// Simulated time cap, seconds.
    pub duration: f64,
    /// Traced venue for theater walkers; defaults to the open corridor.
    #[serde(default)]
    pub scene: Option<PathBuf>,
    #[serde(default)]
    pub walker: Option<WalkerSpec>,
    pub scenario: ScenarioKind,
}

fn config_err(msg: impl Into<String>) -> HarnessError {
    HarnessError::Config(msg.into())
}

impl ScenarioConfig {
    pub fn from_json(text: &str) -> Result<Self, HarnessError> {
        serde_json::from_str(text).map_err(|e| config_err(e.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// Reads, resolves and validates a config file.
    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path).map_err(|e| config_err(format!("{}: {e}", path.display())))?;
        let mut cfg = Self::from_json(&text)?;
        cfg.resolve_paths(path.parent().unwrap_or(Path::new(".")));
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        if let Some(s) = &mut self.scene {
            fix(s);
        }
        if let Some(WalkerSpec::Policy { checkpoint }) = &mut self.walker {
            fix(checkpoint);
        }
        if let ScenarioKind::Theater { cue_sheet: Some(c) } = &mut self.scenario {
            fix(c);
        }
    }

    /// Files the scenario reads.
    pub fn referenced_files(&self) -> Vec<&Path> {
        let mut out = Vec::new();
        if let Some(s) = &self.scene {
            out.push(s.as_path());
        }
        if let Some(WalkerSpec::Policy { checkpoint }) = &self.walker {
            out.push(checkpoint.as_path());
        }
        if let ScenarioKind::Theater { cue_sheet: Some(c) } = &self.scenario {
            out.push(c.as_path());
        }
        out
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        if self.version != CONFIG_VERSION {
            return Err(config_err(format!("unsupported config version {}", self.version)));
        }
        if self.name.is_empty() || self.name.contains(['/', '\\']) || self.name.starts_with('.') {
            return Err(config_err(format!("scenario name {:?} is not a plain directory name", self.name)));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(config_err(format!("dt must be positive, got {}", self.dt)));
        }
        if !(self.duration > 0.0 && self.duration.is_finite()) {
            return Err(config_err(format!("duration must be positive, got {}", self.duration)));
        }
        if self.duration / self.dt > 1e8 {
            return Err(config_err("more than 10^8 steps requested"));
        }
        if let Some(w) = &self.walker {
            if let Some(s) = w.speed() {
                if !(s > 0.0 && s <= MAX_WALKER_SPEED) {
                    return Err(config_err(format!("walker speed {s} outside (0, 3] m/s")));
                }
            }
            if let WalkerSpec::Wander { turn_noise, .. } = w {
                if !(*turn_noise >= 0.0 && turn_noise.is_finite()) {
                    return Err(config_err("turn noise must be non-negative"));
                }
            }
            if let WalkerSpec::Guided { max_turn_rate, .. } = w {
                if !(*max_turn_rate > 0.0) {
                    return Err(config_err("guided turn rate must be positive"));
                }
            }
        }
        let needs_walker = matches!(
            self.scenario,
            ScenarioKind::Theater { .. } | ScenarioKind::Distortion { .. } | ScenarioKind::Bubbles { .. }
        );
        match (&self.walker, needs_walker) {
            (None, true) => return Err(config_err(format!("{} scenarios need a walker", self.scenario.name()))),
            (Some(WalkerSpec::Policy { .. }), true) => {
                return Err(config_err("policy walkers only drive rollout scenarios"))
            }
            (Some(w), false) if !matches!(w, WalkerSpec::Policy { .. }) => {
                return Err(config_err(format!("{} scenarios take only a policy walker", self.scenario.name())))
            }
            _ => {}
        }
        if matches!(self.walker, Some(WalkerSpec::Guided { .. })) && !matches!(self.scenario, ScenarioKind::Theater { .. }) {
            return Err(config_err("guided walkers need a cue sheet to follow"));
        }
        if matches!(self.scenario, ScenarioKind::Train { .. }) && self.walker.is_some() {
            return Err(config_err("train scenarios take no walker"));
        }
        if self.scene.is_some() && !matches!(self.scenario, ScenarioKind::Theater { .. }) {
            return Err(config_err("a scene file only applies to theater scenarios"));
        }
        match &self.scenario {
            ScenarioKind::Distortion { treatment, room, timeline } => {
                treatment.validate().map_err(|e| config_err(e.to_string()))?;
                room.validate().map_err(|e| config_err(e.to_string()))?;
                if let Some(t) = timeline {
                    t.validate().map_err(|e| config_err(e.to_string()))?;
                }
                let total = timeline.as_ref().map_or_else(|| TreatmentTimeline::default().total(), |t| t.total());
                if self.duration + 1e-9 < total {
                    return Err(config_err(format!("duration {} is shorter than the {total} s timeline", self.duration)));
                }
            }
            ScenarioKind::Bubbles { space, altitude } => {
                space.validate().map_err(|e| config_err(e.to_string()))?;
                if !(altitude.is_finite() && *altitude > 0.0) {
                    return Err(config_err("bubble altitude must be positive"));
                }
            }
            ScenarioKind::Rollout { episodes, .. } => {
                if *episodes == 0 {
                    return Err(config_err("rollout needs at least one episode"));
                }
            }
            ScenarioKind::Train { candidates, keep_fraction, eval_episodes, .. } => {
                if *candidates == 0 || *eval_episodes == 0 {
                    return Err(config_err("train needs at least one candidate and evaluation episode"));
                }
                if !(*keep_fraction > 0.0 && *keep_fraction <= 1.0) {
                    return Err(config_err("keep fraction must lie in (0, 1]"));
                }
            }
            ScenarioKind::Theater { .. } => {}
        }
        for f in self.referenced_files() {
            if !f.is_file() {
                return Err(config_err(format!("referenced file {} does not exist", f.display())));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_theater_config_parses() {
        let c = ScenarioConfig::from_json(
            r#"{"version":1,"name":"t","seed":1,"dt":0.02,"duration":600,
                "walker":{"kind":"waypoint"},"scenario":{"kind":"theater"}}"#,
        )
        .unwrap();
        c.validate().unwrap();
        assert_eq!(c.walker, Some(WalkerSpec::Waypoint { points: vec![], speed: 1.4 }));
    }

    #[test]
    fn unknown_fields_and_missing_seed_rejected() {
        let base = r#""name":"t","dt":0.02,"duration":1,"walker":{"kind":"guided"},"scenario":{"kind":"theater"}"#;
        assert!(ScenarioConfig::from_json(&format!(r#"{{"version":1,{base}}}"#)).is_err());
        assert!(ScenarioConfig::from_json(&format!(r#"{{"version":1,"seed":1,"extra":0,{base}}}"#)).is_err());
        assert!(ScenarioConfig::from_json(&format!(r#"{{"version":1,"seed":1,{base}}}"#)).is_ok());
    }

    #[test]
    fn speed_outside_range_rejected() {
        let c = ScenarioConfig::from_json(
            r#"{"version":1,"name":"t","seed":1,"dt":0.02,"duration":1,
                "walker":{"kind":"wander","speed":3.5},"scenario":{"kind":"theater"}}"#,
        )
        .unwrap();
        assert!(matches!(c.validate(), Err(HarnessError::Config(_))));
    }

    #[test]
    fn missing_reference_rejected() {
        let mut c = ScenarioConfig::from_json(
            r#"{"version":1,"name":"t","seed":1,"dt":0.02,"duration":1,"scene":"nope.json",
                "walker":{"kind":"guided"},"scenario":{"kind":"theater"}}"#,
        )
        .unwrap();
        c.resolve_paths(Path::new("/nonexistent"));
        assert!(matches!(c.validate(), Err(HarnessError::Config(_))));
    }
}

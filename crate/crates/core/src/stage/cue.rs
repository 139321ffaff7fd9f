use serde::{Deserialize, Serialize};

use super::StageError;
use crate::geom::Vec2;

pub const CUE_SHEET_SCHEMA_VERSION: u32 = 1;

/// Radius giving a circular zone of 2.8 m².
pub fn default_zone_radius() -> f64 {
    (2.8 / std::f64::consts::PI).sqrt()
}

/// Radius of pathway location triggers, including the stage-advance spiral.
pub const TRIGGER_RADIUS: f64 = 1.0;

/// Minimum spacing between zone centers within one stage.
pub const MIN_ZONE_SPACING: f64 = 2.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ZoneShape {
    Circle { radius: f64 },
    /// Axis-aligned square.
    Square { side: f64 },
}

impl ZoneShape {
    pub fn area(&self) -> f64 {
        match *self {
            ZoneShape::Circle { radius } => std::f64::consts::PI * radius * radius,
            ZoneShape::Square { side } => side * side,
        }
    }

    /// Closed containment test relative to the zone center.
    pub fn contains(&self, offset: Vec2) -> bool {
        match *self {
            ZoneShape::Circle { radius } => offset.norm() <= radius,
            ZoneShape::Square { side } => offset.x.abs() <= side / 2.0 && offset.y.abs() <= side / 2.0,
        }
    }
}

impl Default for ZoneShape {
    fn default() -> Self {
        ZoneShape::Circle { radius: default_zone_radius() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PerformanceClip {
    pub id: String,
    /// Seconds.
    pub duration: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ContentZone {
    pub id: String,
    pub center: Vec2,
    #[serde(default)]
    pub shape: ZoneShape,
    pub clip: PerformanceClip,
}

impl ContentZone {
    pub fn contains(&self, p: Vec2) -> bool {
        self.shape.contains(p - self.center)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum GuidanceMode {
    Particle,
    Arrow,
    None,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpiralSpec {
    pub center: Vec2,
    #[serde(default = "default_trigger_radius")]
    pub radius: f64,
}

fn default_trigger_radius() -> f64 {
    TRIGGER_RADIUS
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Stage {
    pub theme: String,
    pub zones: Vec<ContentZone>,
    pub guidance: GuidanceMode,
    pub spiral: SpiralSpec,
}

/// Ordered themed stages the engine plays through.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CueSheet {
    pub version: u32,
    pub stages: Vec<Stage>,
}

impl CueSheet {
    pub fn validate(&self) -> Result<(), StageError> {
        let invalid = |msg: String| Err(StageError::InvalidCueSheet(msg));
        if self.version != CUE_SHEET_SCHEMA_VERSION {
            return invalid(format!("unsupported version {}", self.version));
        }
        if self.stages.is_empty() {
            return invalid("a cue sheet needs at least one stage".into());
        }
        for stage in &self.stages {
            if stage.zones.is_empty() {
                return invalid(format!("stage {:?} has no content zones", stage.theme));
            }
            if !(stage.spiral.radius > 0.0) {
                return invalid(format!("stage {:?} spiral radius must be positive", stage.theme));
            }
            for (i, z) in stage.zones.iter().enumerate() {
                if !(z.shape.area() > 0.0) {
                    return invalid(format!("zone {:?} has no area", z.id));
                }
                if !(z.clip.duration > 0.0 && z.clip.duration.is_finite()) {
                    return invalid(format!("clip {:?} needs a positive duration", z.clip.id));
                }
                for other in &stage.zones[i + 1..] {
                    if z.center.distance(other.center) < MIN_ZONE_SPACING {
                        return invalid(format!("zones {:?} and {:?} are closer than 2 m", z.id, other.id));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self, StageError> {
        let sheet: CueSheet = serde_json::from_str(text).map_err(|e| StageError::InvalidCueSheet(e.to_string()))?;
        sheet.validate()?;
        Ok(sheet)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("cue sheet serializes")
    }

    pub fn zone_count(&self) -> usize {
        self.stages.iter().map(|s| s.zones.len()).sum()
    }

    /// Three themed stages over the 40 m × 5.2 m corridor venue
    /// ([`CORRIDOR_LENGTH`] × [`CORRIDOR_WIDTH`]). Each stage has three
    /// zones 8 m apart along the corridor; stages alternate walking
    /// direction and end at a spiral near the far end.
    pub fn corridor() -> Self {
        let zone = |stage: &str, n: usize, x: f64, y: f64, duration: f64| ContentZone {
            id: format!("{stage}-zone-{n}"),
            center: Vec2::new(x, y),
            shape: ZoneShape::default(),
            clip: PerformanceClip { id: format!("{stage}-clip-{n}"), duration },
        };
        let stage = |theme: &str, guidance, zones, spiral: Vec2| Stage {
            theme: theme.into(),
            zones,
            guidance,
            spiral: SpiralSpec { center: spiral, radius: TRIGGER_RADIUS },
        };
        CueSheet {
            version: CUE_SHEET_SCHEMA_VERSION,
            stages: vec![
                stage(
                    "future",
                    GuidanceMode::Particle,
                    vec![
                        zone("future", 1, 10.0, 1.2, 18.0),
                        zone("future", 2, 18.0, 4.0, 22.0),
                        zone("future", 3, 26.0, 1.2, 26.0),
                    ],
                    Vec2::new(37.0, 2.6),
                ),
                stage(
                    "fantasy",
                    GuidanceMode::Arrow,
                    vec![
                        zone("fantasy", 1, 30.0, 4.0, 22.0),
                        zone("fantasy", 2, 22.0, 1.2, 26.0),
                        zone("fantasy", 3, 14.0, 4.0, 18.0),
                    ],
                    Vec2::new(3.0, 2.6),
                ),
                stage(
                    "forest",
                    GuidanceMode::None,
                    vec![
                        zone("forest", 1, 9.0, 4.0, 26.0),
                        zone("forest", 2, 17.0, 1.2, 18.0),
                        zone("forest", 3, 25.0, 4.0, 22.0),
                    ],
                    Vec2::new(37.0, 2.6),
                ),
            ],
        }
    }
}

pub const CORRIDOR_LENGTH: f64 = 40.0;
pub const CORRIDOR_WIDTH: f64 = 5.2;
/// Where the audience starts, next to the ticket booth.
pub const CORRIDOR_ENTRY: Vec2 = Vec2::new(2.0, 2.6);

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_zone_has_reference_area() {
        assert!((ZoneShape::default().area() - 2.8).abs() < 1e-12);
        assert!((default_zone_radius() - 0.944).abs() < 1e-3);
    }

    #[test]
    fn corridor_sheet_is_valid() {
        let s = CueSheet::corridor();
        s.validate().unwrap();
        assert_eq!(s.stages.len(), 3);
        assert_eq!(s.zone_count(), 9);
        for st in &s.stages {
            for w in st.zones.windows(2) {
                assert!((w[0].center.x - w[1].center.x).abs() == 8.0);
            }
        }
    }

    #[test]
    fn json_round_trip_and_unknown_fields() {
        let s = CueSheet::corridor();
        assert_eq!(CueSheet::from_json(&s.to_json()).unwrap(), s);
        let mut v: serde_json::Value = serde_json::from_str(&s.to_json()).unwrap();
        v["extra"] = serde_json::json!(1);
        assert!(CueSheet::from_json(&v.to_string()).is_err());
    }

    #[test]
    fn crowded_zones_rejected() {
        let mut s = CueSheet::corridor();
        s.stages[0].zones[1].center = s.stages[0].zones[0].center + Vec2::new(1.0, 0.0);
        assert!(matches!(s.validate(), Err(StageError::InvalidCueSheet(_))));
    }

    #[test]
    fn square_zone_boundary_is_closed() {
        let z = ZoneShape::Square { side: 2.0 };
        assert!(z.contains(Vec2::new(1.0, -1.0)));
        assert!(!z.contains(Vec2::new(1.0001, 0.0)));
    }
}

//! Navigation aids computed per tick: drifting guidance particles, the
//! floor arrow, radar and compass projections and a distance gain cue.

mod arrow;
mod audio;
mod particles;
mod projection;

pub use arrow::{arrow_offset, arrow_pose, ArrowGuideState, ARROW_DISTANCE, ARROW_FADE_SECONDS, ARROW_HEIGHT};
pub use audio::audio_gain;
pub use particles::{aim_error, particle_step, GuideParticle, ParticleConfig, ParticleGuideState};
pub use projection::{
    compass_project, radar_project, to_head_frame, CompassMark, CompassProjection, RadarBlip, RadarProjection,
    RADAR_FOV_HALF_ANGLE_DEG,
};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum GuidanceError {
    #[error("particle count must be between 1 and 6, got {0}")]
    ParticleCount(usize),
    #[error("radar range must be positive, got {0}")]
    InvalidRange(f64),
    #[error("invalid guidance configuration: {0}")]
    InvalidConfig(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AidKind {
    Particle,
    Arrow,
    Radar,
    Compass,
    Audio,
}

/// One row of a guidance trace; `data` holds the aid-specific payload.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GuidanceSample {
    pub t: f64,
    pub aid: AidKind,
    pub data: serde_json::Value,
}

/// CSV with columns `t,aid,data`; list payloads go in a JSON column.
pub fn guidance_csv(samples: &[GuidanceSample]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["t", "aid", "data"]).expect("in-memory write");
    for s in samples {
        let aid = serde_json::to_value(s.aid).expect("aid serializes");
        w.write_record([
            format!("{:.4}", s.t),
            aid.as_str().unwrap_or_default().to_owned(),
            s.data.to_string(),
        ])
        .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("flush")).expect("utf8")
}

pub fn guidance_from_csv(text: &str) -> Result<Vec<GuidanceSample>, GuidanceError> {
    let bad = |e: String| GuidanceError::InvalidConfig(e);
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let mut out = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(|e| bad(e.to_string()))?;
        let t = rec[0].parse().map_err(|_| bad(format!("bad time {:?}", &rec[0])))?;
        let aid = serde_json::from_value(serde_json::Value::String(rec[1].to_owned())).map_err(|e| bad(e.to_string()))?;
        let data = serde_json::from_str(&rec[2]).map_err(|e| bad(e.to_string()))?;
        out.push(GuidanceSample { t, aid, data });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_round_trip_keeps_list_payloads() {
        let s = vec![
            GuidanceSample { t: 0.02, aid: AidKind::Radar, data: serde_json::json!([[0.0, 0.5], [0.1, -0.2]]) },
            GuidanceSample { t: 0.04, aid: AidKind::Arrow, data: serde_json::json!({"opacity": 1.0}) },
        ];
        assert_eq!(guidance_from_csv(&guidance_csv(&s)).unwrap(), s);
    }
}

//! Cue-sheet playback: location triggers, content-zone clips, the
//! stage-advance spiral and per-stage timing reports.

mod cue;
mod engine;
mod report;
mod trigger;

pub use cue::{
    default_zone_radius, ContentZone, CueSheet, GuidanceMode, PerformanceClip, SpiralSpec, Stage, ZoneShape,
    CORRIDOR_ENTRY, CORRIDOR_LENGTH, CORRIDOR_WIDTH, CUE_SHEET_SCHEMA_VERSION, MIN_ZONE_SPACING, TRIGGER_RADIUS,
};
pub use engine::{spiral_subject, step, EventKind, StageEvent, StageState, ZoneStatus, SPIRAL_SUBJECT_PREFIX};
pub use report::{
    distance_between, events_from_jsonl, events_to_jsonl, stage_timing_report, StageTiming, StageTimingReport,
};
pub use trigger::{trigger_check, LocationTrigger};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum StageError {
    #[error("invalid cue sheet: {0}")]
    InvalidCueSheet(String),
    #[error("malformed event stream: {0}")]
    MalformedEventStream(String),
}

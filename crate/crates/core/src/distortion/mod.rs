//! Room distortion treatments, the ambient particle field and locomotion
//! metrics.

mod density;
mod field;
mod metrics;
mod room;
mod timeline;
mod treatment;

pub use density::*;
pub use field::*;
pub use metrics::*;
pub use room::*;
pub use timeline::*;
pub use treatment::*;

#[derive(Debug, thiserror::Error)]
pub enum DistortionError {
    #[error("room dimensions must be positive and finite")]
    InvalidRoom,
    #[error("invalid {0} treatment parameters")]
    InvalidTreatment(&'static str),
    #[error("progress {0} outside [0, 1]")]
    InvalidProgress(f64),
    #[error("geometry is defined for Apply and Return phases only")]
    InvalidPhase,
    #[error("time {0} outside the timeline")]
    OutOfRange(f64),
    #[error("window is empty")]
    EmptyWindow,
    #[error("window [{start}, {end}] extends past the trace")]
    WindowOutOfSpan { start: f64, end: f64 },
    #[error("need at least 2 samples, got {0}")]
    TooFewSamples(usize),
    #[error("invalid timeline: {0}")]
    InvalidTimeline(String),
}

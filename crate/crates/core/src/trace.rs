//! Walker poses and timestamped locomotion traces.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geom::{Vec2, Vec3};

/// Standing head height used when a source does not report one.
pub const DEFAULT_HEAD_HEIGHT: f64 = 1.6;

/// A walker's floor position, yaw and head height.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pose {
    pub position: Vec2,
    pub heading: f64,
    pub head_height: f64,
}

impl Pose {
    pub fn new(position: Vec2, heading: f64) -> Self {
        Self { position, heading, head_height: DEFAULT_HEAD_HEIGHT }
    }

    pub fn head(&self) -> Vec3 {
        self.position.extend(self.head_height)
    }

    pub fn forward(&self) -> Vec2 {
        Vec2::from_angle(self.heading)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceSample {
    pub t: f64,
    pub position: Vec2,
    pub heading: f64,
}

#[derive(Debug, Error, PartialEq)]
pub enum TraceError {
    #[error("trace timestamps must be strictly increasing (sample {index})")]
    NonIncreasingTime { index: usize },
    #[error("trace sample {index} is not finite")]
    NonFinite { index: usize },
}

/// Timestamped pose stream with strictly increasing times.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<TraceSample>", into = "Vec<TraceSample>")]
pub struct LocomotionTrace {
    samples: Vec<TraceSample>,
}

impl LocomotionTrace {
    pub fn new(samples: Vec<TraceSample>) -> Result<Self, TraceError> {
        for (i, s) in samples.iter().enumerate() {
            if !(s.t.is_finite() && s.position.is_finite() && s.heading.is_finite()) {
                return Err(TraceError::NonFinite { index: i });
            }
            if i > 0 && s.t <= samples[i - 1].t {
                return Err(TraceError::NonIncreasingTime { index: i });
            }
        }
        Ok(Self { samples })
    }

    /// Appends a sample; rejects non-increasing time.
    pub fn push(&mut self, sample: TraceSample) -> Result<(), TraceError> {
        let index = self.samples.len();
        if !(sample.t.is_finite() && sample.position.is_finite()) {
            return Err(TraceError::NonFinite { index });
        }
        if self.samples.last().is_some_and(|l| sample.t <= l.t) {
            return Err(TraceError::NonIncreasingTime { index });
        }
        self.samples.push(sample);
        Ok(())
    }

    pub fn samples(&self) -> &[TraceSample] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// `(first, last)` timestamps.
    pub fn span(&self) -> Option<(f64, f64)> {
        Some((self.samples.first()?.t, self.samples.last()?.t))
    }

    /// Linearly interpolated position at `t`, clamped to the trace span.
    pub fn position_at(&self, t: f64) -> Option<Vec2> {
        let s = &self.samples;
        let first = s.first()?;
        if t <= first.t {
            return Some(first.position);
        }
        let last = s.last()?;
        if t >= last.t {
            return Some(last.position);
        }
        let i = s.partition_point(|x| x.t <= t);
        let (a, b) = (&s[i - 1], &s[i]);
        let u = (t - a.t) / (b.t - a.t);
        Some(a.position.lerp(b.position, u))
    }

    /// Sum of consecutive sample distances.
    pub fn path_length(&self) -> f64 {
        self.samples.windows(2).map(|w| w[0].position.distance(w[1].position)).sum()
    }

    /// Same trace with every position shifted by `offset`.
    pub fn translated(&self, offset: Vec2) -> Self {
        Self {
            samples: self
                .samples
                .iter()
                .map(|s| TraceSample { position: s.position + offset, ..*s })
                .collect(),
        }
    }
}

impl TryFrom<Vec<TraceSample>> for LocomotionTrace {
    type Error = TraceError;

    fn try_from(v: Vec<TraceSample>) -> Result<Self, Self::Error> {
        Self::new(v)
    }
}

impl From<LocomotionTrace> for Vec<TraceSample> {
    fn from(t: LocomotionTrace) -> Self {
        t.samples
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s(t: f64, x: f64) -> TraceSample {
        TraceSample { t, position: Vec2::new(x, 0.0), heading: 0.0 }
    }

    #[test]
    fn rejects_repeated_time() {
        assert_eq!(
            LocomotionTrace::new(vec![s(0.0, 0.0), s(0.0, 1.0)]),
            Err(TraceError::NonIncreasingTime { index: 1 })
        );
    }

    #[test]
    fn interpolates_between_samples() {
        let tr = LocomotionTrace::new(vec![s(0.0, 0.0), s(2.0, 4.0)]).unwrap();
        assert_eq!(tr.position_at(0.5).unwrap(), Vec2::new(1.0, 0.0));
        assert_eq!(tr.position_at(9.0).unwrap(), Vec2::new(4.0, 0.0));
        assert_eq!(tr.path_length(), 4.0);
    }
}

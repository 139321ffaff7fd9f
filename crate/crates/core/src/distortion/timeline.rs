use serde::{Deserialize, Serialize};

use super::treatment::Phase;
use super::DistortionError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimelineSegment {
    pub phase: Phase,
    pub duration: f64,
}

/// Ordered stimulus segments of one trial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TreatmentTimeline {
    pub segments: Vec<TimelineSegment>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimelinePoint {
    pub segment: usize,
    pub phase: Phase,
    /// Fraction of the current segment elapsed.
    pub progress: f64,
    /// Applied fraction of the treatment (0 = physical room).
    pub extent: f64,
}

impl Default for TreatmentTimeline {
    /// 60 s trial: Apply 10, Hold 5, Return 10, Hold 5, twice.
    fn default() -> Self {
        let seg = |phase, duration| TimelineSegment { phase, duration };
        let cycle = [seg(Phase::Apply, 10.0), seg(Phase::Hold, 5.0), seg(Phase::Return, 10.0), seg(Phase::Hold, 5.0)];
        Self { segments: cycle.iter().chain(cycle.iter()).copied().collect() }
    }
}

impl TreatmentTimeline {
    pub fn new(segments: Vec<TimelineSegment>) -> Result<Self, DistortionError> {
        let t = Self { segments };
        t.validate()?;
        Ok(t)
    }

    /// Positive durations; Apply and Return alternate starting with Apply.
    pub fn validate(&self) -> Result<(), DistortionError> {
        if self.segments.is_empty() {
            return Err(DistortionError::InvalidTimeline("no segments".into()));
        }
        let mut expect = Phase::Apply;
        for (i, s) in self.segments.iter().enumerate() {
            if !(s.duration > 0.0 && s.duration.is_finite()) {
                return Err(DistortionError::InvalidTimeline(format!("segment {i} has no duration")));
            }
            if s.phase == Phase::Hold {
                continue;
            }
            if s.phase != expect {
                return Err(DistortionError::InvalidTimeline(format!("segment {i} breaks Apply/Return alternation")));
            }
            expect = if expect == Phase::Apply { Phase::Return } else { Phase::Apply };
        }
        Ok(())
    }

    pub fn total(&self) -> f64 {
        self.segments.iter().map(|s| s.duration).sum()
    }

    /// `(start, end)` of every segment.
    pub fn spans(&self) -> Vec<(f64, f64)> {
        let mut t = 0.0;
        self.segments
            .iter()
            .map(|s| {
                let span = (t, t + s.duration);
                t += s.duration;
                span
            })
            .collect()
    }

    /// Phase and progress at trial time `t`. Segment boundaries belong to
    /// the later segment, except the trial end which closes the last one.
    pub fn timeline_step(&self, t: f64) -> Result<TimelinePoint, DistortionError> {
        let total = self.total();
        if !(t >= 0.0 && t <= total + 1e-9) {
            return Err(DistortionError::OutOfRange(t));
        }
        let mut extent = 0.0;
        let mut start = 0.0;
        let last = self.segments.len() - 1;
        for (i, s) in self.segments.iter().enumerate() {
            let end = start + s.duration;
            if t < end || i == last {
                let progress = ((t - start) / s.duration).clamp(0.0, 1.0);
                let extent = match s.phase {
                    Phase::Apply => progress,
                    Phase::Return => 1.0 - progress,
                    Phase::Hold => extent,
                };
                return Ok(TimelinePoint { segment: i, phase: s.phase, progress, extent });
            }
            extent = match s.phase {
                Phase::Apply => 1.0,
                Phase::Return => 0.0,
                Phase::Hold => extent,
            };
            start = end;
        }
        unreachable!("timeline has at least one segment")
    }

    /// Spans of the Apply and Return segments, in order.
    pub fn stimulus_spans(&self) -> Vec<(Phase, f64, f64)> {
        self.segments
            .iter()
            .zip(self.spans())
            .filter(|(s, _)| s.phase != Phase::Hold)
            .map(|(s, (a, b))| (s.phase, a, b))
            .collect()
    }
}

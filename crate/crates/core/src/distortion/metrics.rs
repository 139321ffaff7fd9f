use serde::{Deserialize, Serialize};

use super::room::RoomModel;
use super::timeline::TreatmentTimeline;
use super::treatment::Phase;
use super::DistortionError;
use crate::geom::Vec2;
use crate::trace::LocomotionTrace;

/// Closed time interval `[start, end]` in trace time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Window {
    pub start: f64,
    pub end: f64,
}

impl Window {
    pub fn new(start: f64, end: f64) -> Self {
        Self { start, end }
    }

    pub fn contains(&self, t: f64) -> bool {
        t >= self.start && t <= self.end
    }
}

const SPAN_SLACK: f64 = 1e-9;

fn endpoints(trace: &LocomotionTrace, w: Window) -> Result<(Vec2, Vec2), DistortionError> {
    if !(w.end > w.start) {
        return Err(DistortionError::EmptyWindow);
    }
    let (t0, t1) = trace.span().ok_or(DistortionError::EmptyWindow)?;
    if w.start < t0 - SPAN_SLACK || w.end > t1 + SPAN_SLACK {
        return Err(DistortionError::WindowOutOfSpan { start: w.start, end: w.end });
    }
    let a = trace.position_at(w.start).ok_or(DistortionError::EmptyWindow)?;
    let b = trace.position_at(w.end).ok_or(DistortionError::EmptyWindow)?;
    Ok((a, b))
}

/// Net displacement over the window projected on `axis` (unit vector).
pub fn axis_movement(trace: &LocomotionTrace, axis: Vec2, window: Window) -> Result<f64, DistortionError> {
    let (a, b) = endpoints(trace, window)?;
    Ok((b - a).dot(axis))
}

/// Change in distance to `center` between the window ends. Positive means
/// the walker ended farther from the center.
pub fn center_distance_change(trace: &LocomotionTrace, center: Vec2, window: Window) -> Result<f64, DistortionError> {
    let (a, b) = endpoints(trace, window)?;
    Ok(b.distance(center) - a.distance(center))
}

pub fn total_walking_distance(trace: &LocomotionTrace) -> Result<f64, DistortionError> {
    if trace.len() < 2 {
        return Err(DistortionError::TooFewSamples(trace.len()));
    }
    Ok(trace.path_length())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentMetrics {
    pub segment: usize,
    pub phase: Phase,
    pub start: f64,
    pub end: f64,
    pub axis_displacement: f64,
    pub center_distance_change: f64,
}

/// Metrics for every Apply and Return segment of `timeline`, with trial
/// time measured from the first trace sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialMetrics {
    pub segments: Vec<SegmentMetrics>,
    pub total_walking_distance: f64,
}

pub fn trial_metrics(
    trace: &LocomotionTrace,
    room: &RoomModel,
    timeline: &TreatmentTimeline,
) -> Result<TrialMetrics, DistortionError> {
    let origin = trace.span().ok_or(DistortionError::TooFewSamples(0))?.0;
    let mut segments = Vec::new();
    for (i, (seg, (a, b))) in timeline.segments.iter().zip(timeline.spans()).enumerate() {
        if seg.phase == Phase::Hold {
            continue;
        }
        let w = Window::new(origin + a, origin + b);
        segments.push(SegmentMetrics {
            segment: i,
            phase: seg.phase,
            start: a,
            end: b,
            axis_displacement: axis_movement(trace, room.short_axis(), w)?,
            center_distance_change: center_distance_change(trace, room.center(), w)?,
        });
    }
    Ok(TrialMetrics { segments, total_walking_distance: total_walking_distance(trace)? })
}

/// CSV with one row per trace per stimulus segment.
pub fn metrics_csv<'a>(rows: impl IntoIterator<Item = (&'a str, &'a TrialMetrics)>) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "trace",
        "segment",
        "phase",
        "start",
        "end",
        "axis_displacement",
        "center_distance_change",
        "total_walking_distance",
    ])
    .expect("in-memory write");
    for (id, m) in rows {
        for s in &m.segments {
            w.write_record([
                id.to_string(),
                s.segment.to_string(),
                format!("{:?}", s.phase),
                s.start.to_string(),
                s.end.to_string(),
                s.axis_displacement.to_string(),
                s.center_distance_change.to_string(),
                m.total_walking_distance.to_string(),
            ])
            .expect("in-memory write");
        }
    }
    String::from_utf8(w.into_inner().expect("flush")).expect("utf8")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trace::TraceSample;

    fn line(from: Vec2, vel: Vec2, seconds: f64, dt: f64) -> LocomotionTrace {
        let n = (seconds / dt).round() as usize;
        LocomotionTrace::new(
            (0..=n)
                .map(|k| {
                    let t = k as f64 * dt;
                    TraceSample { t, position: from + vel * t, heading: 0.0 }
                })
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn stationary_walker_has_zero_metrics() {
        let tr = line(Vec2::new(1.0, 1.0), Vec2::ZERO, 10.0, 0.1);
        let w = Window::new(0.0, 10.0);
        assert_eq!(axis_movement(&tr, Vec2::new(1.0, 0.0), w).unwrap(), 0.0);
        assert_eq!(center_distance_change(&tr, Vec2::new(2.0, 2.0), w).unwrap(), 0.0);
    }

    #[test]
    fn walking_along_axis() {
        let tr = line(Vec2::ZERO, Vec2::new(0.2, 0.0), 10.0, 0.02);
        let d = axis_movement(&tr, Vec2::new(1.0, 0.0), Window::new(0.0, 10.0)).unwrap();
        assert!((d - 2.0).abs() < 1e-12);
    }

    #[test]
    fn leaving_the_center() {
        let c = Vec2::new(2.25, 2.75);
        let tr = line(c, Vec2::new(0.15, 0.0), 10.0, 0.1);
        let d = center_distance_change(&tr, c, Window::new(0.0, 10.0)).unwrap();
        assert!((d - 1.5).abs() < 1e-12);
    }

    #[test]
    fn square_loop_distance() {
        let pts = [(0.0, 0.0), (2.0, 0.0), (2.0, 2.0), (0.0, 2.0), (0.0, 0.0)];
        let tr = LocomotionTrace::new(
            pts.iter()
                .enumerate()
                .map(|(i, &(x, y))| TraceSample { t: i as f64, position: Vec2::new(x, y), heading: 0.0 })
                .collect(),
        )
        .unwrap();
        assert_eq!(total_walking_distance(&tr).unwrap(), 8.0);
    }

    #[test]
    fn window_errors() {
        let tr = line(Vec2::ZERO, Vec2::ZERO, 5.0, 1.0);
        let ax = Vec2::new(1.0, 0.0);
        assert!(matches!(axis_movement(&tr, ax, Window::new(2.0, 2.0)), Err(DistortionError::EmptyWindow)));
        assert!(matches!(
            axis_movement(&tr, ax, Window::new(2.0, 9.0)),
            Err(DistortionError::WindowOutOfSpan { .. })
        ));
        let one = LocomotionTrace::new(vec![TraceSample { t: 0.0, position: Vec2::ZERO, heading: 0.0 }]).unwrap();
        assert!(matches!(total_walking_distance(&one), Err(DistortionError::TooFewSamples(1))));
    }

    #[test]
    fn trial_has_one_row_per_stimulus_segment() {
        let tr = line(Vec2::new(1.0, 2.0), Vec2::new(0.01, 0.0), 60.0, 0.1);
        let m = trial_metrics(&tr, &RoomModel::default(), &TreatmentTimeline::default()).unwrap();
        assert_eq!(m.segments.len(), 4);
        for s in &m.segments {
            assert!((s.axis_displacement - 0.1).abs() < 1e-9);
        }
        let csv = metrics_csv([("w0", &m)]);
        assert_eq!(csv.lines().count(), 5);
    }
}

use serde::{Deserialize, Serialize};

use super::engine::{EventKind, StageEvent, SPIRAL_SUBJECT_PREFIX};
use super::StageError;
use crate::trace::LocomotionTrace;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageTiming {
    pub stage: usize,
    pub start: f64,
    pub end: f64,
    pub duration: f64,
    /// Zone ids in the order their triggers fired.
    pub zone_visit_order: Vec<String>,
    /// Meters walked between `start` and `end`, when a trace was supplied.
    pub distance: Option<f64>,
    /// False when the stream stops before the stage advanced.
    pub complete: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageTimingReport {
    pub stages: Vec<StageTiming>,
    pub total_duration: f64,
    pub total_distance: Option<f64>,
}

/// Splits an event stream at StageAdvanced/PlayEnded markers. The play is
/// taken to start at time 0.
pub fn stage_timing_report(
    events: &[StageEvent],
    trace: Option<&LocomotionTrace>,
) -> Result<StageTimingReport, StageError> {
    let mut ended = false;
    for (i, e) in events.iter().enumerate() {
        if !e.time.is_finite() || e.time < 0.0 {
            return Err(StageError::MalformedEventStream(format!("event {i} has invalid time {}", e.time)));
        }
        if i > 0 && e.time < events[i - 1].time {
            return Err(StageError::MalformedEventStream(format!("event {i} goes back in time")));
        }
        if ended {
            return Err(StageError::MalformedEventStream(format!("event {i} follows PlayEnded")));
        }
        ended = e.kind == EventKind::PlayEnded;
    }

    let mut stages = Vec::new();
    let mut start = 0.0;
    let mut order = Vec::new();
    for e in events {
        match e.kind {
            EventKind::TriggerFired if !e.subject.starts_with(SPIRAL_SUBJECT_PREFIX) => {
                order.push(e.subject.clone());
            }
            EventKind::StageAdvanced | EventKind::PlayEnded => {
                stages.push(timing(stages.len(), start, e.time, std::mem::take(&mut order), trace, true));
                start = e.time;
            }
            _ => {}
        }
    }
    if !ended {
        if let Some(last) = events.last() {
            if last.time > start || !order.is_empty() {
                stages.push(timing(stages.len(), start, last.time, order, trace, false));
            }
        }
    }
    let total_duration = stages.iter().map(|s| s.duration).sum();
    let total_distance = trace.map(|_| stages.iter().filter_map(|s| s.distance).sum());
    Ok(StageTimingReport { stages, total_duration, total_distance })
}

fn timing(
    stage: usize,
    start: f64,
    end: f64,
    zone_visit_order: Vec<String>,
    trace: Option<&LocomotionTrace>,
    complete: bool,
) -> StageTiming {
    StageTiming {
        stage,
        start,
        end,
        duration: end - start,
        zone_visit_order,
        distance: trace.map(|t| distance_between(t, start, end)),
        complete,
    }
}

/// Path length of the trace restricted to `[start, end]`, with interpolated
/// endpoints.
pub fn distance_between(trace: &LocomotionTrace, start: f64, end: f64) -> f64 {
    let (Some(a), Some(b)) = (trace.position_at(start), trace.position_at(end)) else {
        return 0.0;
    };
    let inner: Vec<_> = trace.samples().iter().filter(|s| s.t > start && s.t < end).map(|s| s.position).collect();
    let mut prev = a;
    let mut total = 0.0;
    for p in inner.into_iter().chain(std::iter::once(b)) {
        total += prev.distance(p);
        prev = p;
    }
    total
}

/// One JSON object per line: `{"time":…,"kind":"…","subject":"…"}`.
pub fn events_to_jsonl(events: &[StageEvent]) -> String {
    let mut out = String::new();
    for e in events {
        out.push_str(&serde_json::to_string(e).expect("event serializes"));
        out.push('\n');
    }
    out
}

pub fn events_from_jsonl(text: &str) -> Result<Vec<StageEvent>, StageError> {
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .enumerate()
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|e| StageError::MalformedEventStream(format!("line {}: {e}", i + 1)))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::Vec2;
    use crate::trace::TraceSample;

    fn ev(time: f64, kind: EventKind, subject: &str) -> StageEvent {
        StageEvent { time, kind, subject: subject.into() }
    }

    #[test]
    fn instantaneous_walker_single_stage_lasts_sum_of_clips() {
        use EventKind::*;
        let events = vec![
            ev(0.0, TriggerFired, "a"),
            ev(0.0, ClipStarted, "ca"),
            ev(0.0, TriggerFired, "b"),
            ev(0.0, ClipStarted, "cb"),
            ev(0.0, TriggerFired, "c"),
            ev(0.0, ClipStarted, "cc"),
            ev(10.0, ClipEnded, "ca"),
            ev(20.0, ClipEnded, "cb"),
            ev(30.0, ClipEnded, "cc"),
            ev(30.0, SpiralSpawned, "spiral:x"),
            ev(60.0, TriggerFired, "spiral:x"),
            ev(60.0, PlayEnded, "play"),
        ];
        let r = stage_timing_report(&events, None).unwrap();
        assert_eq!(r.stages.len(), 1);
        assert_eq!(r.stages[0].duration, 60.0);
        assert_eq!(r.stages[0].zone_visit_order, ["a", "b", "c"]);
    }

    #[test]
    fn out_of_order_stream_rejected() {
        let events = vec![ev(2.0, EventKind::ClipStarted, "a"), ev(1.0, EventKind::ClipEnded, "a")];
        assert!(matches!(stage_timing_report(&events, None), Err(StageError::MalformedEventStream(_))));
    }

    #[test]
    fn three_stage_stream_has_three_entries_and_distances() {
        use EventKind::*;
        let events = vec![ev(10.0, StageAdvanced, "s1"), ev(20.0, StageAdvanced, "s2"), ev(30.0, PlayEnded, "play")];
        let samples = (0..=30)
            .map(|k| TraceSample { t: k as f64, position: Vec2::new(k as f64, 0.0), heading: 0.0 })
            .collect();
        let trace = LocomotionTrace::new(samples).unwrap();
        let r = stage_timing_report(&events, Some(&trace)).unwrap();
        assert_eq!(r.stages.len(), 3);
        assert_eq!(r.total_distance, Some(30.0));
        assert!(r.stages.iter().all(|s| s.distance == Some(10.0)));
    }

    #[test]
    fn jsonl_round_trip() {
        let events = vec![ev(0.5, EventKind::TriggerFired, "z"), ev(1.0, EventKind::PlayEnded, "play")];
        let text = events_to_jsonl(&events);
        assert_eq!(text.lines().count(), 2);
        assert_eq!(events_from_jsonl(&text).unwrap(), events);
    }
}

use std::path::Path;

use arstage_agents::{episode_reward_oracle, EnvConfig};
use arstage_core::bubbles::{note_on_time, NoteEvent, NoteKind};
use arstage_core::distortion::{
    density_map, trial_metrics, Phase, RoomModel, SegmentMetrics, TreatmentTimeline, TrialMetrics,
};
use arstage_core::stage::{events_from_jsonl, stage_timing_report, StageTimingReport};
use arstage_core::LocomotionTrace;
use serde::Serialize;
use serde_json::{json, Value};

use crate::bundle::Bundle;
use crate::config::{ScenarioConfig, ScenarioKind};
use crate::error::HarnessError;
use crate::records::{locomotion_trace, trace_from_csv, TraceRecord};
use crate::svg::{line_chart, Series};

pub const REPORT_DIR: &str = "report";
/// Largest allowed gap between stored and recomputed values.
pub const CONSISTENCY_TOLERANCE: f64 = 1e-6;
const MAX_PLOTTED_EPISODES: usize = 8;

fn missing(path: &str) -> HarnessError {
    HarnessError::IncompleteBundle(format!("missing {path}"))
}

fn file<'a>(b: &'a Bundle, path: &str) -> Result<&'a [u8], HarnessError> {
    b.get(path).ok_or_else(|| missing(path))
}

fn text<'a>(b: &'a Bundle, path: &str) -> Result<&'a str, HarnessError> {
    std::str::from_utf8(file(b, path)?).map_err(|e| HarnessError::IncompleteBundle(format!("{path}: {e}")))
}

fn json_file(b: &Bundle, path: &str) -> Result<Value, HarnessError> {
    serde_json::from_str(text(b, path)?).map_err(|e| HarnessError::IncompleteBundle(format!("{path}: {e}")))
}

fn parsed<T: serde::de::DeserializeOwned>(b: &Bundle, path: &str) -> Result<T, HarnessError> {
    serde_json::from_str(text(b, path)?).map_err(|e| HarnessError::IncompleteBundle(format!("{path}: {e}")))
}

fn records(b: &Bundle, path: &str) -> Result<Vec<TraceRecord>, HarnessError> {
    trace_from_csv(file(b, path)?)
}

/// Trace for the records, or None when there are too few samples to form one.
fn maybe_trace(records: &[TraceRecord]) -> Option<LocomotionTrace> {
    (records.len() >= 2).then(|| locomotion_trace(records).ok()).flatten()
}

/// Files the report adds to a bundle, keyed by bundle-relative path.
pub struct Report {
    pub json: Value,
    pub files: Vec<(String, Vec<u8>)>,
}

/// Recomputes a bundle's results from its raw traces and writes them under
/// `report/`, then rewrites the manifest to list the new files.
pub fn emit_report(dir: &Path) -> Result<Value, HarnessError> {
    let mut bundle = Bundle::read(dir)?;
    let report = build_report(&bundle)?;
    bundle.files.retain(|k, _| !k.starts_with(&format!("{REPORT_DIR}/")));
    for (path, data) in report.files {
        bundle.add(format!("{REPORT_DIR}/{path}"), data);
    }
    bundle.add_json(format!("{REPORT_DIR}/report.json"), &report.json);
    bundle.write(dir)?;
    Ok(report.json)
}

pub fn build_report(b: &Bundle) -> Result<Report, HarnessError> {
    if b.kind == "trace" {
        let summary = json_file(b, "summary.json")?;
        file(b, "venue.obj")?;
        return Ok(Report { json: json!({ "kind": "trace", "name": b.name, "scene": summary }), files: vec![] });
    }
    let cfg: ScenarioConfig = ScenarioConfig::from_json(text(b, "config.json")?)
        .map_err(|e| HarnessError::IncompleteBundle(format!("config.json: {e}")))?;
    let mut files = Vec::new();
    let body = match &cfg.scenario {
        ScenarioKind::Theater { .. } => theater(b, &mut files)?,
        ScenarioKind::Distortion { room, timeline, .. } => {
            distortion(b, room, &timeline.clone().unwrap_or_default(), &mut files)?
        }
        ScenarioKind::Bubbles { .. } => bubbles(b, &mut files)?,
        ScenarioKind::Rollout { .. } => rollout(b, &mut files)?,
        ScenarioKind::Train { .. } => train(b, &mut files)?,
    };
    let mut out = json!({ "kind": b.kind, "name": b.name, "seed": b.seed });
    if let (Value::Object(o), Value::Object(body)) = (&mut out, body) {
        o.extend(body);
    }
    Ok(Report { json: out, files })
}

fn svg(files: &mut Vec<(String, Vec<u8>)>, name: &str, chart: String) {
    files.push((name.into(), chart.into_bytes()));
}

fn theater(b: &Bundle, files: &mut Vec<(String, Vec<u8>)>) -> Result<Value, HarnessError> {
    let recs = records(b, "trace.csv")?;
    let events = events_from_jsonl(text(b, "events.jsonl")?)
        .map_err(|e| HarnessError::IncompleteBundle(format!("events.jsonl: {e}")))?;
    let trace = maybe_trace(&recs);
    let timing = stage_timing_report(&events, trace.as_ref())
        .map_err(|e| HarnessError::IncompleteBundle(format!("events.jsonl: {e}")))?;
    let stored: StageTimingReport = parsed(b, "timing.json")?;
    let consistent = stored.stages.len() == timing.stages.len()
        && stored.stages.iter().zip(&timing.stages).all(|(a, c)| {
            a.zone_visit_order == c.zone_visit_order
                && (a.duration - c.duration).abs() <= CONSISTENCY_TOLERANCE
                && match (a.distance, c.distance) {
                    (Some(x), Some(y)) => (x - y).abs() <= CONSISTENCY_TOLERANCE,
                    (x, y) => x.is_none() && y.is_none(),
                }
        });

    let stages = recs.iter().filter_map(|r| r.stage).max().map_or(0, |s| s + 1);
    let series: Vec<Series> = (0..stages)
        .map(|s| Series {
            name: format!("stage {s}"),
            points: recs
                .iter()
                .filter(|r| r.stage == Some(s))
                .filter_map(|r| r.target_distance.map(|d| (r.t, d)))
                .collect(),
        })
        .collect();
    svg(files, "target_distance.svg", line_chart("Distance to next target", "time (s)", "distance (m)", &series));
    let path = vec![Series { name: "walker".into(), points: recs.iter().map(|r| (r.x, r.y)).collect() }];
    svg(files, "path.svg", line_chart("Walker path", "x (m)", "y (m)", &path));
    Ok(json!({ "timing": timing, "consistent": consistent }))
}

/// Zero displacement for every stimulus segment.
fn zero_metrics(timeline: &TreatmentTimeline) -> TrialMetrics {
    let segments = timeline
        .segments
        .iter()
        .zip(timeline.spans())
        .enumerate()
        .filter(|(_, (s, _))| s.phase != Phase::Hold)
        .map(|(i, (s, (a, e)))| SegmentMetrics {
            segment: i,
            phase: s.phase,
            start: a,
            end: e,
            axis_displacement: 0.0,
            center_distance_change: 0.0,
        })
        .collect();
    TrialMetrics { segments, total_walking_distance: 0.0 }
}

fn metrics_match(a: &TrialMetrics, b: &TrialMetrics) -> bool {
    let close = |x: f64, y: f64| (x - y).abs() <= CONSISTENCY_TOLERANCE;
    a.segments.len() == b.segments.len()
        && close(a.total_walking_distance, b.total_walking_distance)
        && a.segments.iter().zip(&b.segments).all(|(x, y)| {
            x.segment == y.segment
                && close(x.axis_displacement, y.axis_displacement)
                && close(x.center_distance_change, y.center_distance_change)
        })
}

fn distortion(
    b: &Bundle,
    room: &RoomModel,
    timeline: &TreatmentTimeline,
    files: &mut Vec<(String, Vec<u8>)>,
) -> Result<Value, HarnessError> {
    let recs = records(b, "trace.csv")?;
    let trace = maybe_trace(&recs);
    let metrics = match &trace {
        Some(t) => trial_metrics(t, room, timeline).unwrap_or_else(|_| zero_metrics(timeline)),
        None => zero_metrics(timeline),
    };
    let stored: Option<TrialMetrics> = b.get("metrics.json").and_then(|d| serde_json::from_slice(d).ok());
    let consistent = stored.as_ref().is_some_and(|s| metrics_match(s, &metrics));

    let axis = room.short_axis();
    let origin = recs.first().map_or(0.0, |r| r.t);
    let series: Vec<Series> = metrics
        .segments
        .iter()
        .map(|m| {
            let inside: Vec<&TraceRecord> =
                recs.iter().filter(|r| r.t - origin >= m.start && r.t - origin <= m.end).collect();
            let start = inside.first().map(|r| (r.x, r.y));
            Series {
                name: format!("segment {} ({:?})", m.segment, m.phase),
                points: inside
                    .iter()
                    .map(|r| {
                        let (x0, y0) = start.expect("non-empty");
                        (r.t - origin - m.start, (r.x - x0) * axis.x + (r.y - y0) * axis.y)
                    })
                    .collect(),
            }
        })
        .collect();
    svg(files, "axis_movement.svg", line_chart("Movement along the short axis", "time in segment (s)", "displacement (m)", &series));

    let density = density_map(trace.as_slice(), room, timeline);
    let uniformity = (density.total() > 0).then(|| density.chi_square_uniformity(room, 0.05));
    files.push(("density.pgm".into(), density.to_pgm()));
    Ok(json!({
        "metrics": metrics,
        "density": density.metadata_json(),
        "density_uniformity": uniformity,
        "consistent": consistent,
    }))
}

fn bubbles(b: &Bundle, files: &mut Vec<(String, Vec<u8>)>) -> Result<Value, HarnessError> {
    let recs = records(b, "trace.csv")?;
    let notes: Vec<NoteEvent> = text(b, "notes.jsonl")?
        .lines()
        .filter(|l| !l.trim().is_empty())
        .map(serde_json::from_str)
        .collect::<Result<_, _>>()
        .map_err(|e| HarnessError::IncompleteBundle(format!("notes.jsonl: {e}")))?;
    let end = recs.last().map_or(0.0, |r| r.t);
    let on_seconds = note_on_time(&notes, end);
    let stored = json_file(b, "summary.json")?;
    let consistent = stored["note_on_seconds"].as_f64().is_some_and(|s| (s - on_seconds).abs() <= CONSISTENCY_TOLERANCE);

    let mut sounding = 0i64;
    let mut points = vec![(0.0, 0.0)];
    for n in &notes {
        sounding += if n.kind == NoteKind::On { 1 } else { -1 };
        points.push((n.time, sounding as f64));
    }
    points.push((end, sounding as f64));
    svg(files, "notes.svg", line_chart("Sounding notes", "time (s)", "notes", &[Series { name: "notes".into(), points }]));
    Ok(json!({
        "notes_on": notes.iter().filter(|n| n.kind == NoteKind::On).count(),
        "note_on_seconds": on_seconds,
        "duration": end,
        "consistent": consistent,
    }))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
struct EpisodeCheck {
    episode: usize,
    stored_reward: f64,
    recomputed_reward: f64,
    zones_entered: usize,
}

fn rollout(b: &Bundle, files: &mut Vec<(String, Vec<u8>)>) -> Result<Value, HarnessError> {
    let env: EnvConfig = parsed(b, "env.json")?;
    let stored = json_file(b, "rollout.json")?;
    let eps = stored["episodes"].as_array().ok_or_else(|| missing("rollout.json episodes"))?;
    let mut checks = Vec::with_capacity(eps.len());
    let mut series = Vec::new();
    for (i, ep) in eps.iter().enumerate() {
        let recs = records(b, &format!("traces/episode-{i:03}.csv"))?;
        let recomputed = maybe_trace(&recs)
            .map_or(0.0, |t| episode_reward_oracle(&t, &env.layout, env.agent_radius, &env.rewards).total());
        checks.push(EpisodeCheck {
            episode: i,
            stored_reward: ep["reward"].as_f64().unwrap_or(f64::NAN),
            recomputed_reward: recomputed,
            zones_entered: recs.last().and_then(|r| r.stage).unwrap_or(0),
        });
        if i < MAX_PLOTTED_EPISODES {
            series.push(Series {
                name: format!("episode {i}"),
                points: recs.iter().filter_map(|r| r.stage.map(|s| (r.t, s as f64))).collect(),
            });
        }
    }
    let max_diff = checks.iter().map(|c| (c.stored_reward - c.recomputed_reward).abs()).fold(0.0, f64::max);
    svg(files, "zones.svg", line_chart("Zones entered", "time (s)", "zones", &series));
    let paths: Vec<Series> = (0..eps.len().min(MAX_PLOTTED_EPISODES))
        .map(|i| {
            let recs = records(b, &format!("traces/episode-{i:03}.csv"))?;
            Ok(Series { name: format!("episode {i}"), points: recs.iter().map(|r| (r.x, r.y)).collect() })
        })
        .collect::<Result<_, HarnessError>>()?;
    svg(files, "paths.svg", line_chart("Agent paths", "x (m)", "y (m)", &paths));
    Ok(json!({
        "summary": stored["summary"],
        "episodes": checks,
        "max_reward_difference": max_diff,
        "consistent": max_diff.is_finite() && max_diff <= CONSISTENCY_TOLERANCE,
    }))
}

/// `(steps, mean_reward)` rows of a stats CSV, skipping iterations with no
/// finished episode.
pub fn reward_curve(stats: &[u8]) -> Result<Vec<(f64, f64)>, HarnessError> {
    let bad = |e: csv::Error| HarnessError::IncompleteBundle(format!("stats.csv: {e}"));
    let mut r = csv::Reader::from_reader(stats);
    let headers = r.headers().map_err(bad)?.clone();
    let col = |name: &str| {
        headers.iter().position(|h| h == name).ok_or_else(|| missing(&format!("stats.csv column {name}")))
    };
    let (steps, reward) = (col("steps")?, col("mean_reward")?);
    let mut out = Vec::new();
    for row in r.records() {
        let row = row.map_err(bad)?;
        if let (Ok(s), Ok(m)) = (row[steps].parse::<f64>(), row[reward].parse::<f64>()) {
            out.push((s, m));
        }
    }
    Ok(out)
}

fn train(b: &Bundle, files: &mut Vec<(String, Vec<u8>)>) -> Result<Value, HarnessError> {
    let selection = json_file(b, "selection.json")?;
    let candidates = selection["candidates"].as_array().ok_or_else(|| missing("selection.json candidates"))?;
    file(b, "policy.bin")?;
    let mut series = Vec::new();
    for c in 0..candidates.len() {
        let points = reward_curve(file(b, &format!("candidates/cand-{c:02}/stats.csv"))?)?;
        series.push(Series { name: format!("candidate {c}"), points });
    }
    let final_rewards: Vec<Option<f64>> = series.iter().map(|s| s.points.last().map(|p| p.1)).collect();
    svg(files, "reward.svg", line_chart("Training reward", "environment steps", "mean episode reward", &series));
    Ok(json!({
        "candidates": candidates,
        "final_training_reward": final_rewards,
        "best": selection["best"],
        "kept": selection["kept"],
        "consistent": true,
    }))
}

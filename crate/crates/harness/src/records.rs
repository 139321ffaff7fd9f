use arstage_core::{LocomotionTrace, TraceSample, Vec2};
use serde::{Deserialize, Serialize};

use crate::error::HarnessError;

/// First line of every trace file.
pub const TRACE_HEADER: &str = "# arstage-trace v1";

/// One simulated pose with its scenario context.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub t: f64,
    pub x: f64,
    pub y: f64,
    pub heading: f64,
    /// Stage index in a theater play, segment index in a distortion trial,
    /// zones entered in an agent rollout.
    pub stage: Option<usize>,
    pub guidance: String,
    pub target_distance: Option<f64>,
}

impl TraceRecord {
    pub fn sample(&self) -> TraceSample {
        TraceSample { t: self.t, position: Vec2::new(self.x, self.y), heading: self.heading }
    }
}

/// Versioned CSV; floats are written in shortest round-trip form.
pub fn trace_to_csv(records: &[TraceRecord]) -> Vec<u8> {
    let mut out = format!("{TRACE_HEADER}\n").into_bytes();
    let mut w = csv::Writer::from_writer(&mut out);
    for r in records {
        w.serialize(r).expect("in-memory write");
    }
    if records.is_empty() {
        w.write_record(["t", "x", "y", "heading", "stage", "guidance", "target_distance"]).expect("in-memory write");
    }
    w.flush().expect("flush");
    drop(w);
    out
}

pub fn trace_from_csv(data: &[u8]) -> Result<Vec<TraceRecord>, HarnessError> {
    let bad = |m: String| HarnessError::IncompleteBundle(format!("trace file: {m}"));
    let text = std::str::from_utf8(data).map_err(|e| bad(e.to_string()))?;
    let body = text.strip_prefix(TRACE_HEADER).ok_or_else(|| bad("missing version header".into()))?;
    let body = body.strip_prefix('\n').unwrap_or(body);
    let mut r = csv::Reader::from_reader(body.as_bytes());
    r.deserialize().map(|rec| rec.map_err(|e| bad(e.to_string()))).collect()
}

pub fn locomotion_trace(records: &[TraceRecord]) -> Result<LocomotionTrace, HarnessError> {
    LocomotionTrace::new(records.iter().map(TraceRecord::sample).collect())
        .map_err(|e| HarnessError::IncompleteBundle(format!("trace file: {e}")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_is_lossless() {
        let recs = vec![
            TraceRecord {
                t: 0.1,
                x: 1.0 / 3.0,
                y: -2.5e-17,
                heading: std::f64::consts::PI,
                stage: Some(2),
                guidance: "particle".into(),
                target_distance: None,
            },
            TraceRecord {
                t: 0.30000000000000004,
                x: 7.0,
                y: 1e300,
                heading: -0.0,
                stage: None,
                guidance: "none".into(),
                target_distance: Some(0.1 + 0.2),
            },
        ];
        let bytes = trace_to_csv(&recs);
        let back = trace_from_csv(&bytes).unwrap();
        assert_eq!(back, recs);
        assert!(back[1].heading.is_sign_negative());
        assert!(trace_from_csv(&trace_to_csv(&[])).unwrap().is_empty());
    }

    #[test]
    fn missing_header_rejected() {
        assert!(trace_from_csv(b"t,x\n1,2\n").is_err());
    }
}

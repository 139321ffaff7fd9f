use serde::{Deserialize, Serialize};

use super::TwinError;
use crate::geom::{Segment, Vec2};

/// Endpoints closer than this to an existing joint reuse that joint.
pub const SNAP_TOLERANCE: f64 = 0.02;

pub type JointId = usize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SegmentMode {
    Wall,
    Object,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TracedSegment {
    pub a: JointId,
    pub b: JointId,
    pub mode: SegmentMode,
}

/// Hand-traced outline graph in floor coordinates (meters).
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TraceGraph {
    pub joints: Vec<Vec2>,
    pub segments: Vec<TracedSegment>,
}

impl TraceGraph {
    pub fn new() -> Self {
        Self::default()
    }

    fn nearest_joint(&self, p: Vec2) -> Option<JointId> {
        self.joints
            .iter()
            .enumerate()
            .map(|(i, j)| (i, j.distance(p)))
            .filter(|&(_, d)| d <= SNAP_TOLERANCE)
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .map(|(i, _)| i)
    }

    fn joint_for(&mut self, p: Vec2) -> JointId {
        self.nearest_joint(p).unwrap_or_else(|| {
            self.joints.push(p);
            self.joints.len() - 1
        })
    }

    /// Appends a traced line from `a` to `b`, snapping either end onto an
    /// existing joint within [`SNAP_TOLERANCE`].
    pub fn trace_segment(mut self, a: Vec2, b: Vec2, mode: SegmentMode) -> Result<Self, TwinError> {
        if a.distance(b) <= SNAP_TOLERANCE {
            return Err(TwinError::DegenerateSegment);
        }
        let (ja, jb) = (self.nearest_joint(a), self.nearest_joint(b));
        if ja.is_some() && ja == jb {
            return Err(TwinError::DegenerateSegment);
        }
        let ja = self.joint_for(a);
        let jb = self.joint_for(b);
        self.segments.push(TracedSegment { a: ja, b: jb, mode });
        Ok(self)
    }

    /// Relocates a joint; incident segments follow since they store ids.
    pub fn move_joint(mut self, id: JointId, new_pos: Vec2) -> Result<Self, TwinError> {
        let j = self.joints.get_mut(id).ok_or(TwinError::UnknownJoint(id))?;
        *j = new_pos;
        Ok(self)
    }

    pub fn segment_geometry(&self, s: &TracedSegment) -> Segment {
        Segment::new(self.joints[s.a], self.joints[s.b])
    }

    pub fn segments_of(&self, mode: SegmentMode) -> impl Iterator<Item = &TracedSegment> {
        self.segments.iter().filter(move |s| s.mode == mode)
    }

    /// Checks that every segment references an existing joint.
    pub fn validate(&self) -> Result<(), TwinError> {
        for s in &self.segments {
            for id in [s.a, s.b] {
                if id >= self.joints.len() {
                    return Err(TwinError::UnknownJoint(id));
                }
            }
        }
        Ok(())
    }

    /// Decomposes the Object segments into closed rings of joint ids.
    ///
    /// Every joint touched by an Object segment must have exactly two
    /// Object segments incident on it.
    pub fn object_loops(&self) -> Result<Vec<Vec<JointId>>, TwinError> {
        self.validate()?;
        let objs: Vec<&TracedSegment> = self.segments_of(SegmentMode::Object).collect();
        let mut incident: Vec<Vec<usize>> = vec![Vec::new(); self.joints.len()];
        for (k, s) in objs.iter().enumerate() {
            incident[s.a].push(k);
            incident[s.b].push(k);
        }
        if let Some(joint) = incident.iter().position(|v| !v.is_empty() && v.len() != 2) {
            return Err(TwinError::OpenObjectLoop { joint });
        }
        let mut used = vec![false; objs.len()];
        let mut loops = Vec::new();
        for start in 0..objs.len() {
            if used[start] {
                continue;
            }
            used[start] = true;
            let first = objs[start].a;
            let mut ring = vec![first];
            let mut current = objs[start].b;
            let mut prev_seg = start;
            while current != first {
                ring.push(current);
                let next_seg = incident[current]
                    .iter()
                    .copied()
                    .find(|&k| k != prev_seg && !used[k])
                    .ok_or(TwinError::OpenObjectLoop { joint: current })?;
                used[next_seg] = true;
                let s = objs[next_seg];
                current = if s.a == current { s.b } else { s.a };
                prev_seg = next_seg;
            }
            loops.push(ring);
        }
        Ok(loops)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(x: f64, y: f64) -> Vec2 {
        Vec2::new(x, y)
    }

    #[test]
    fn first_segment_creates_two_joints() {
        let g = TraceGraph::new().trace_segment(p(0.0, 0.0), p(4.0, 0.0), SegmentMode::Wall).unwrap();
        assert_eq!(g.joints.len(), 2);
        assert_eq!(g.segments.len(), 1);
    }

    #[test]
    fn endpoint_within_a_centimeter_snaps() {
        let g = TraceGraph::new()
            .trace_segment(p(0.0, 0.0), p(4.0, 0.0), SegmentMode::Wall)
            .unwrap()
            .trace_segment(p(4.0, 3.0), p(4.007, 0.007), SegmentMode::Wall)
            .unwrap();
        // (4.007, 0.007) is 0.0099 m from (4, 0): reused, so only one new joint.
        assert_eq!(g.joints.len(), 3);
        assert_eq!(g.segments[1].b, 1);
    }

    #[test]
    fn coincident_endpoints_are_degenerate() {
        let err = TraceGraph::new().trace_segment(p(1.0, 1.0), p(1.0, 1.0), SegmentMode::Wall);
        assert!(matches!(err, Err(TwinError::DegenerateSegment)));
    }

    #[test]
    fn moving_a_corner_drags_both_segments() {
        let g = TraceGraph::new()
            .trace_segment(p(0.0, 0.0), p(2.0, 0.0), SegmentMode::Wall)
            .unwrap()
            .trace_segment(p(2.0, 0.0), p(2.0, 2.0), SegmentMode::Wall)
            .unwrap();
        let corner = g.segments[0].b;
        let g = g.move_joint(corner, p(3.0, -1.0)).unwrap();
        assert_eq!(g.segment_geometry(&g.segments[0]).b, p(3.0, -1.0));
        assert_eq!(g.segment_geometry(&g.segments[1]).a, p(3.0, -1.0));
    }

    #[test]
    fn unknown_joint_rejected() {
        assert!(matches!(TraceGraph::new().move_joint(3, p(0.0, 0.0)), Err(TwinError::UnknownJoint(3))));
    }

    #[test]
    fn rectangle_forms_one_loop() {
        let mut g = TraceGraph::new();
        let c = [p(0.0, 0.0), p(4.0, 0.0), p(4.0, 3.0), p(0.0, 3.0)];
        for i in 0..4 {
            g = g.trace_segment(c[i], c[(i + 1) % 4], SegmentMode::Object).unwrap();
        }
        let loops = g.object_loops().unwrap();
        assert_eq!(loops.len(), 1);
        assert_eq!(loops[0].len(), 4);
    }
}

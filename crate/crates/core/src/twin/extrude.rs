use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::graph::{SegmentMode, TraceGraph};
use super::TwinError;
use crate::geom::{ring_is_simple, signed_area, Vec2, Vec3};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MeshSource {
    Wall,
    Object,
}

/// Triangle mesh produced by extruding traced lines from the floor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtrudedMesh {
    pub vertices: Vec<Vec3>,
    pub faces: Vec<[usize; 3]>,
    pub source: MeshSource,
    pub height: f64,
}

impl ExtrudedMesh {
    /// The floor footprint of an Object prism (its bottom ring, CCW).
    pub fn footprint(&self) -> Vec<Vec2> {
        self.vertices.iter().filter(|v| v.z == 0.0).map(|v| v.xy()).collect()
    }

    pub fn triangle_area(&self, f: [usize; 3]) -> f64 {
        let [a, b, c] = f.map(|i| self.vertices[i]);
        (b - a).cross(c - a).norm() * 0.5
    }

    pub fn surface_area(&self) -> f64 {
        self.faces.iter().map(|&f| self.triangle_area(f)).sum()
    }
}

/// Signed volume by summing tetrahedra against the origin.
pub fn mesh_volume(mesh: &ExtrudedMesh) -> f64 {
    mesh.faces
        .iter()
        .map(|&[a, b, c]| {
            let (a, b, c) = (mesh.vertices[a], mesh.vertices[b], mesh.vertices[c]);
            a.dot(b.cross(c))
        })
        .sum::<f64>()
        / 6.0
}

/// Every undirected edge is used by exactly two faces, once in each
/// direction (closed and consistently wound).
pub fn is_watertight(mesh: &ExtrudedMesh) -> bool {
    let mut directed: HashMap<(usize, usize), usize> = HashMap::new();
    for f in &mesh.faces {
        for k in 0..3 {
            *directed.entry((f[k], f[(k + 1) % 3])).or_default() += 1;
        }
    }
    directed
        .iter()
        .all(|(&(a, b), &n)| n == 1 && directed.get(&(b, a)) == Some(&1))
}

/// Extrudes Wall segments into vertical quads and Object loops into capped
/// prisms, all from `z = 0` to `z = wall_height`.
pub fn extrude(graph: &TraceGraph, wall_height: f64) -> Result<Vec<ExtrudedMesh>, TwinError> {
    if !(wall_height > 0.0 && wall_height.is_finite()) {
        return Err(TwinError::InvalidHeight(wall_height));
    }
    let loops = graph.object_loops()?;
    let mut meshes = Vec::new();
    for s in graph.segments_of(SegmentMode::Wall) {
        let seg = graph.segment_geometry(s);
        meshes.push(ExtrudedMesh {
            vertices: vec![
                seg.a.extend(0.0),
                seg.b.extend(0.0),
                seg.b.extend(wall_height),
                seg.a.extend(wall_height),
            ],
            faces: vec![[0, 1, 2], [0, 2, 3]],
            source: MeshSource::Wall,
            height: wall_height,
        });
    }
    for ring_ids in loops {
        let mut ring: Vec<Vec2> = ring_ids.iter().map(|&j| graph.joints[j]).collect();
        if ring.len() < 3 || !ring_is_simple(&ring) || signed_area(&ring).abs() < 1e-12 {
            return Err(TwinError::DegenerateLoop { joint: ring_ids[0] });
        }
        if signed_area(&ring) < 0.0 {
            ring.reverse();
        }
        meshes.push(prism(&ring, wall_height)?);
    }
    Ok(meshes)
}

fn prism(ring: &[Vec2], height: f64) -> Result<ExtrudedMesh, TwinError> {
    let n = ring.len();
    let mut vertices: Vec<Vec3> = ring.iter().map(|p| p.extend(0.0)).collect();
    vertices.extend(ring.iter().map(|p| p.extend(height)));
    let cap = ear_clip(ring).ok_or(TwinError::DegenerateLoop { joint: 0 })?;
    let mut faces = Vec::with_capacity(2 * n + 2 * cap.len());
    for &[a, b, c] in &cap {
        faces.push([a + n, b + n, c + n]);
        faces.push([a, c, b]);
    }
    for i in 0..n {
        let j = (i + 1) % n;
        faces.push([i, j, j + n]);
        faces.push([i, j + n, i + n]);
    }
    Ok(ExtrudedMesh { vertices, faces, source: MeshSource::Object, height })
}

/// Ear-clipping triangulation of a simple counter-clockwise ring.
fn ear_clip(ring: &[Vec2]) -> Option<Vec<[usize; 3]>> {
    let mut idx: Vec<usize> = (0..ring.len()).collect();
    let mut tris = Vec::with_capacity(ring.len().saturating_sub(2));
    while idx.len() > 3 {
        let m = idx.len();
        let ear = (0..m).find(|&k| {
            let (ia, ib, ic) = (idx[(k + m - 1) % m], idx[k], idx[(k + 1) % m]);
            let (a, b, c) = (ring[ia], ring[ib], ring[ic]);
            if (b - a).cross(c - b) <= 0.0 {
                return false;
            }
            !idx.iter().any(|&o| {
                o != ia && o != ib && o != ic && in_triangle(ring[o], a, b, c)
            })
        })?;
        tris.push([idx[(ear + m - 1) % m], idx[ear], idx[(ear + 1) % m]]);
        idx.remove(ear);
    }
    tris.push([idx[0], idx[1], idx[2]]);
    Some(tris)
}

fn in_triangle(p: Vec2, a: Vec2, b: Vec2, c: Vec2) -> bool {
    (b - a).cross(p - a) >= 0.0 && (c - b).cross(p - b) >= 0.0 && (a - c).cross(p - c) >= 0.0
}

#[cfg(test)]
mod tests {
    use super::*;

    fn traced_loop(points: &[(f64, f64)], close: bool) -> TraceGraph {
        let pts: Vec<Vec2> = points.iter().map(|&(x, y)| Vec2::new(x, y)).collect();
        let mut g = TraceGraph::new();
        let n = pts.len();
        let count = if close { n } else { n - 1 };
        for i in 0..count {
            g = g.trace_segment(pts[i], pts[(i + 1) % n], SegmentMode::Object).unwrap();
        }
        g
    }

    #[test]
    fn single_wall_is_one_quad() {
        let g = TraceGraph::new()
            .trace_segment(Vec2::new(0.0, 0.0), Vec2::new(4.0, 0.0), SegmentMode::Wall)
            .unwrap();
        let meshes = extrude(&g, 2.5).unwrap();
        assert_eq!(meshes.len(), 1);
        assert_eq!(meshes[0].vertices.len(), 4);
        assert_eq!(meshes[0].faces.len(), 2);
        assert!((meshes[0].surface_area() - 10.0).abs() < 1e-12);
    }

    #[test]
    fn rectangle_prism_volume() {
        let g = traced_loop(&[(0.0, 0.0), (4.0, 0.0), (4.0, 3.0), (0.0, 3.0)], true);
        let meshes = extrude(&g, 2.5).unwrap();
        assert_eq!(meshes.len(), 1);
        assert!(is_watertight(&meshes[0]));
        let v = mesh_volume(&meshes[0]);
        assert!(((v - 30.0) / 30.0).abs() < 1e-9, "volume {v}");
    }

    #[test]
    fn clockwise_and_concave_loops_extrude_outward() {
        // Clockwise L-shape; area 3, so volume 3 at unit height.
        let g = traced_loop(&[(0.0, 0.0), (0.0, 2.0), (1.0, 2.0), (1.0, 1.0), (2.0, 1.0), (2.0, 0.0)], true);
        let m = &extrude(&g, 1.0).unwrap()[0];
        assert!(is_watertight(m));
        assert!((mesh_volume(m) - 3.0).abs() < 1e-12);
    }

    #[test]
    fn open_triangle_rejected() {
        let g = traced_loop(&[(0.0, 0.0), (1.0, 0.0), (0.0, 1.0)], false);
        assert!(matches!(extrude(&g, 1.0), Err(TwinError::OpenObjectLoop { .. })));
    }

    #[test]
    fn collapsed_joint_fails_validation() {
        let g = traced_loop(&[(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)], true);
        let g = g.move_joint(2, Vec2::new(1.0, 0.0)).unwrap();
        assert!(matches!(extrude(&g, 1.0), Err(TwinError::DegenerateLoop { .. })));
    }

    #[test]
    fn zero_height_rejected() {
        assert!(matches!(extrude(&TraceGraph::new(), 0.0), Err(TwinError::InvalidHeight(_))));
    }
}

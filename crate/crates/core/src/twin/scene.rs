use serde::{Deserialize, Serialize};

use super::anchor::AnchorTransform;
use super::extrude::{extrude, ExtrudedMesh, MeshSource};
use super::graph::{SegmentMode, TraceGraph};
use super::TwinError;
use crate::geom::{point_in_ring, ring_edges, ring_is_simple, signed_area, Aabb2, Segment, Vec2};

pub const SCENE_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolygonWithHoles {
    pub outer: Vec<Vec2>,
    pub holes: Vec<Vec<Vec2>>,
}

impl PolygonWithHoles {
    pub fn contains(&self, p: Vec2) -> bool {
        point_in_ring(&self.outer, p) && !self.holes.iter().any(|h| point_in_ring(h, p))
    }

    pub fn area(&self) -> f64 {
        signed_area(&self.outer).abs() - self.holes.iter().map(|h| signed_area(h).abs()).sum::<f64>()
    }
}

/// Polygonal digital twin of a venue.
///
/// Walls are infinitely thin traced lines; obstacles are the floor
/// footprints of Object prisms and appear as holes in the walkable region.
/// The scene bounds act as an outer fence for raycasts.
#[derive(Debug, Clone, PartialEq)]
pub struct OcclusionScene {
    pub meshes: Vec<ExtrudedMesh>,
    pub walls: Vec<Segment>,
    pub walkable: PolygonWithHoles,
    pub bounds: Aabb2,
    pub anchor: AnchorTransform,
}

impl OcclusionScene {
    /// Assembles a scene from wall lines and obstacle footprints.
    pub fn new(walls: Vec<Segment>, obstacles: Vec<Vec<Vec2>>, bounds: Aabb2) -> Result<Self, TwinError> {
        if !(bounds.width() > 0.0 && bounds.height() > 0.0) {
            return Err(TwinError::EmptyBounds);
        }
        for (i, o) in obstacles.iter().enumerate() {
            if !o.iter().all(|&p| bounds.contains(p)) {
                return Err(TwinError::ObstacleOutOfBounds(i));
            }
        }
        let walkable = PolygonWithHoles { outer: bounds.corners().to_vec(), holes: obstacles };
        if !ring_is_simple(&walkable.outer) || !walkable.holes.iter().all(|h| ring_is_simple(h)) {
            return Err(TwinError::NonSimpleWalkable);
        }
        Ok(Self { meshes: Vec::new(), walls, walkable, bounds, anchor: AnchorTransform::IDENTITY })
    }

    /// Extrudes a traced graph and derives its walkable region. Without
    /// explicit bounds the joints' bounding box is used.
    pub fn from_graph(graph: &TraceGraph, wall_height: f64, bounds: Option<Aabb2>) -> Result<Self, TwinError> {
        let meshes = extrude(graph, wall_height)?;
        let bounds = match bounds {
            Some(b) => b,
            None => Aabb2::from_points(graph.joints.iter().copied()).ok_or(TwinError::EmptyBounds)?,
        };
        let walls = graph.segments_of(SegmentMode::Wall).map(|s| graph.segment_geometry(s)).collect();
        let obstacles = meshes
            .iter()
            .filter(|m| m.source == MeshSource::Object)
            .map(ExtrudedMesh::footprint)
            .collect();
        let mut scene = Self::new(walls, obstacles, bounds)?;
        scene.meshes = meshes;
        Ok(scene)
    }

    pub fn obstacles(&self) -> &[Vec<Vec2>] {
        &self.walkable.holes
    }

    /// Interior barriers: walls plus obstacle outlines.
    pub fn occluders(&self) -> impl Iterator<Item = Segment> + '_ {
        self.walls.iter().copied().chain(self.walkable.holes.iter().flat_map(|h| ring_edges(h)))
    }

    /// Everything a ray can hit: occluders plus the bounding fence.
    pub fn barriers(&self) -> impl Iterator<Item = Segment> + '_ {
        self.occluders().chain(ring_edges(&self.walkable.outer))
    }

    pub fn point_in_walkable(&self, p: Vec2) -> bool {
        self.walkable.contains(p)
    }

    /// Distance along `direction` to the nearest barrier within `max_range`.
    pub fn raycast(&self, origin: Vec2, direction: Vec2, max_range: f64) -> Result<Option<f64>, TwinError> {
        let n = direction.norm();
        if (n - 1.0).abs() > 1e-6 {
            return Err(TwinError::InvalidDirection(n));
        }
        Ok(self
            .barriers()
            .filter_map(|s| s.ray_hit(origin, direction))
            .filter(|&t| t <= max_range)
            .min_by(f64::total_cmp))
    }

    /// True when the segment `a`–`b` crosses no wall or obstacle edge.
    pub fn line_of_sight(&self, a: Vec2, b: Vec2) -> Result<bool, TwinError> {
        for p in [a, b] {
            if !self.bounds.contains(p) {
                return Err(TwinError::OutOfBounds { x: p.x, y: p.y });
            }
        }
        if a == b {
            return Ok(true);
        }
        let sight = Segment::new(a, b);
        Ok(!self.occluders().any(|s| s.intersects(&sight)))
    }

    /// Distance from `p` to the nearest barrier (walls, obstacles, fence).
    pub fn clearance(&self, p: Vec2) -> f64 {
        self.barriers().map(|s| s.distance_to(p)).fold(f64::INFINITY, f64::min)
    }
}

/// On-disk scene description: the traced graph plus derived walkable
/// region and anchor alignment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneFile {
    pub version: u32,
    pub wall_height: f64,
    pub bounds: Aabb2,
    pub joints: Vec<Vec2>,
    pub segments: Vec<super::graph::TracedSegment>,
    #[serde(default)]
    pub walkable: Option<PolygonWithHoles>,
    #[serde(default)]
    pub anchor: AnchorTransform,
}

impl SceneFile {
    pub fn from_scene(graph: &TraceGraph, scene: &OcclusionScene, wall_height: f64) -> Self {
        Self {
            version: SCENE_SCHEMA_VERSION,
            wall_height,
            bounds: scene.bounds,
            joints: graph.joints.clone(),
            segments: graph.segments.clone(),
            walkable: Some(scene.walkable.clone()),
            anchor: scene.anchor,
        }
    }

    pub fn graph(&self) -> TraceGraph {
        TraceGraph { joints: self.joints.clone(), segments: self.segments.clone() }
    }

    /// Rebuilds the scene from the traced graph. A stored walkable polygon
    /// is informational; it is always re-derived.
    pub fn build(&self) -> Result<(TraceGraph, OcclusionScene), TwinError> {
        if self.version != SCENE_SCHEMA_VERSION {
            return Err(TwinError::SchemaVersion(self.version));
        }
        let graph = self.graph();
        let mut scene = OcclusionScene::from_graph(&graph, self.wall_height, Some(self.bounds))?;
        scene.anchor = self.anchor;
        Ok((graph, scene))
    }

    pub fn from_json(text: &str) -> Result<Self, TwinError> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scene serializes")
    }
}

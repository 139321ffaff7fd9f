//! Digital-twin venue geometry.
//!
//! A venue is traced by hand over a calibrated floorplan bitmap into a
//! [`TraceGraph`] of wall lines and closed object outlines, extruded into
//! meshes, and assembled into an [`OcclusionScene`] that answers the spatial
//! queries the rest of the simulation relies on (walkability, raycasts and
//! line of sight).

mod anchor;
mod extrude;
mod floorplan;
mod graph;
mod obj;
mod scene;

pub use anchor::{apply_anchor, AnchorTransform};
pub use extrude::{extrude, is_watertight, mesh_volume, ExtrudedMesh, MeshSource};
pub use floorplan::{load_floorplan, FloorPlanImage, OCCUPANCY_THRESHOLD};
pub use graph::{JointId, SegmentMode, TraceGraph, TracedSegment, SNAP_TOLERANCE};
pub use obj::{export_obj, parse_obj, ObjData};
pub use scene::{OcclusionScene, PolygonWithHoles, SceneFile, SCENE_SCHEMA_VERSION};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum TwinError {
    #[error("cannot decode floorplan image: {0}")]
    Decode(String),
    #[error("pixels per meter must be positive, got {0}")]
    Scale(f64),
    #[error("segment endpoints coincide within the snap tolerance")]
    DegenerateSegment,
    #[error("unknown joint {0}")]
    UnknownJoint(usize),
    #[error("object segments at joint {joint} do not form a closed loop")]
    OpenObjectLoop { joint: usize },
    #[error("object loop through joint {joint} is not a simple polygon")]
    DegenerateLoop { joint: usize },
    #[error("extrusion height must be positive, got {0}")]
    InvalidHeight(f64),
    #[error("ray direction must be unit length (|d| = {0})")]
    InvalidDirection(f64),
    #[error("point ({x}, {y}) lies outside the scene bounds")]
    OutOfBounds { x: f64, y: f64 },
    #[error("obstacle footprint {0} extends outside the scene bounds")]
    ObstacleOutOfBounds(usize),
    #[error("walkable polygon is not simple")]
    NonSimpleWalkable,
    #[error("scene must have a non-empty bounding box")]
    EmptyBounds,
    #[error("unsupported scene schema version {0}")]
    SchemaVersion(u32),
    #[error("malformed OBJ at line {line}: {msg}")]
    Obj { line: usize, msg: String },
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

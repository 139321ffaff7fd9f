//! Headless simulation core for location-based augmented-reality
//! performances: venue twins, cue-sheet staging, guidance aids, room
//! distortion treatments and the bubble instrument.

pub mod geom;
pub mod rng;
pub mod trace;
pub mod twin;

pub use geom::{Aabb2, Segment, Vec2, Vec3};
pub use trace::{LocomotionTrace, Pose, TraceSample};
pub mod guidance;
pub mod stage;
pub mod bubbles;
pub mod distortion;

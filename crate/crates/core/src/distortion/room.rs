use serde::{Deserialize, Serialize};

use super::DistortionError;
use crate::geom::{signed_area, Vec2, Vec3};

/// Reference virtual-room volume before enlargement, m³.
pub const VIRTUAL_ROOM_VOLUME: f64 = 56.82;
/// Virtual-room volume at full enlargement, m³.
pub const ENLARGED_ROOM_VOLUME: f64 = 454.56;

/// Physical room, with its minimum corner at the origin. `width` runs
/// along `x`, `length` along `y`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RoomModel {
    pub width: f64,
    pub length: f64,
    pub height: f64,
    /// Floor tile edge used for density maps.
    pub tile: f64,
}

impl Default for RoomModel {
    fn default() -> Self {
        Self { width: 4.5, length: 5.5, height: 2.5, tile: 0.65 }
    }
}

impl RoomModel {
    pub fn validate(&self) -> Result<(), DistortionError> {
        let dims = [self.width, self.length, self.height, self.tile];
        if dims.iter().all(|d| *d > 0.0 && d.is_finite()) {
            Ok(())
        } else {
            Err(DistortionError::InvalidRoom)
        }
    }

    pub fn center(&self) -> Vec2 {
        Vec2::new(self.width / 2.0, self.length / 2.0)
    }

    /// Unit vector along the room's smaller floor dimension.
    pub fn short_axis(&self) -> Vec2 {
        if self.width <= self.length {
            Vec2::new(1.0, 0.0)
        } else {
            Vec2::new(0.0, 1.0)
        }
    }

    pub fn floor_area(&self) -> f64 {
        self.width * self.length
    }

    pub fn volume(&self) -> f64 {
        self.width * self.length * self.height
    }

    pub fn contains(&self, p: Vec2) -> bool {
        (0.0..=self.width).contains(&p.x) && (0.0..=self.length).contains(&p.y)
    }

    /// Wall outline sampled with `per_wall` segments on each wall, counter-
    /// clockwise from the origin, as floor and ceiling rings.
    pub fn geometry(&self, per_wall: usize) -> RoomGeometry {
        let n = per_wall.max(1);
        let corners = [
            Vec2::new(0.0, 0.0),
            Vec2::new(self.width, 0.0),
            Vec2::new(self.width, self.length),
            Vec2::new(0.0, self.length),
        ];
        let mut ring = Vec::with_capacity(4 * n);
        for c in 0..4 {
            let (a, b) = (corners[c], corners[(c + 1) % 4]);
            for k in 0..n {
                ring.push(a.lerp(b, k as f64 / n as f64));
            }
        }
        RoomGeometry {
            floor: ring.iter().map(|p| p.extend(0.0)).collect(),
            ceiling: ring.iter().map(|p| p.extend(self.height)).collect(),
        }
    }
}

/// Floor and ceiling rings of a (possibly distorted) virtual room.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoomGeometry {
    pub floor: Vec<Vec3>,
    pub ceiling: Vec<Vec3>,
}

/// Axis-aligned 3D box.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Aabb3 {
    pub min: Vec3,
    pub max: Vec3,
}

impl Aabb3 {
    pub fn volume(&self) -> f64 {
        let d = self.max - self.min;
        d.x.max(0.0) * d.y.max(0.0) * d.z.max(0.0)
    }

    pub fn contains(&self, p: Vec3) -> bool {
        p.x >= self.min.x
            && p.x <= self.max.x
            && p.y >= self.min.y
            && p.y <= self.max.y
            && p.z >= self.min.z
            && p.z <= self.max.z
    }
}

impl RoomGeometry {
    pub fn vertices(&self) -> impl Iterator<Item = Vec3> + '_ {
        self.floor.iter().chain(&self.ceiling).copied()
    }

    pub fn bounds(&self) -> Aabb3 {
        let mut min = Vec3::new(f64::INFINITY, f64::INFINITY, f64::INFINITY);
        let mut max = -min;
        for v in self.vertices() {
            min = Vec3::new(min.x.min(v.x), min.y.min(v.y), min.z.min(v.z));
            max = Vec3::new(max.x.max(v.x), max.y.max(v.y), max.z.max(v.z));
        }
        Aabb3 { min, max }
    }

    pub fn floor_area(&self) -> f64 {
        let ring: Vec<Vec2> = self.floor.iter().map(|v| v.xy()).collect();
        signed_area(&ring).abs()
    }

    /// Largest vertex displacement relative to `other` (same topology).
    pub fn max_deviation(&self, other: &RoomGeometry) -> f64 {
        self.vertices().zip(other.vertices()).map(|(a, b)| a.distance(b)).fold(0.0, f64::max)
    }
}

use serde::{Deserialize, Serialize};

use crate::geom::{Vec2, Vec3};

/// Uniform-scale yaw-only rigid alignment from twin to venue coordinates:
/// `p' = uniform_scale * Rz(rotation) * p + translation`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnchorTransform {
    pub translation: Vec3,
    pub rotation: f64,
    pub uniform_scale: f64,
}

impl Default for AnchorTransform {
    fn default() -> Self {
        Self::IDENTITY
    }
}

impl AnchorTransform {
    pub const IDENTITY: AnchorTransform =
        AnchorTransform { translation: Vec3::ZERO, rotation: 0.0, uniform_scale: 1.0 };

    /// Returns `None` unless the scale is finite and positive.
    pub fn new(translation: Vec3, rotation: f64, uniform_scale: f64) -> Option<Self> {
        (uniform_scale > 0.0 && uniform_scale.is_finite())
            .then_some(Self { translation, rotation, uniform_scale })
    }

    pub fn apply(&self, p: Vec3) -> Vec3 {
        let r = Vec2::new(p.x, p.y).rotated(self.rotation) * self.uniform_scale;
        Vec3::new(r.x, r.y, p.z * self.uniform_scale) + self.translation
    }

    pub fn inverse(&self) -> Self {
        let s = 1.0 / self.uniform_scale;
        let t = Vec2::new(self.translation.x, self.translation.y).rotated(-self.rotation) * -s;
        Self {
            translation: Vec3::new(t.x, t.y, -self.translation.z * s),
            rotation: -self.rotation,
            uniform_scale: s,
        }
    }

    /// `self ∘ other`: apply `other` first.
    pub fn compose(&self, other: &AnchorTransform) -> Self {
        Self {
            translation: self.apply(other.translation),
            rotation: self.rotation + other.rotation,
            uniform_scale: self.uniform_scale * other.uniform_scale,
        }
    }
}

pub fn apply_anchor(t: &AnchorTransform, p: Vec3) -> Vec3 {
    t.apply(p)
}

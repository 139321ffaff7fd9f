use serde::{Deserialize, Serialize};

use super::room::{RoomGeometry, RoomModel};
use super::DistortionError;
use crate::geom::Vec3;

/// A parameterized room transform. Every kind is the identity at zero
/// extent and reaches its full effect at extent 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DistortionTreatment {
    /// The wall at `x = width` recedes outward by up to `extent` meters;
    /// the adjoining walls stretch with it.
    Elongation { extent: f64 },
    /// The two `y`-running walls are extended to `arc_length` and bent
    /// into a circular arc whose total turn reaches `bend_angle_deg`.
    Warp { bend_angle_deg: f64, arc_length: f64 },
    /// The room slides sideways along `x` by up to `extent` meters.
    Shift { extent: f64 },
    /// The room rises vertically by up to `extent` meters.
    Elevation { extent: f64 },
    /// The room scales about its floor center, up to `factor` per dimension.
    Enlarge { factor: f64 },
}

impl DistortionTreatment {
    pub const ELONGATION: Self = Self::Elongation { extent: 3.35 };
    pub const WARP: Self = Self::Warp { bend_angle_deg: 160.0, arc_length: 19.33 };
    pub const SHIFT: Self = Self::Shift { extent: 5.14 };
    pub const ELEVATION: Self = Self::Elevation { extent: 8.07 };
    pub const ENLARGE: Self = Self::Enlarge { factor: 2.0 };

    pub const ALL: [Self; 5] = [Self::ELONGATION, Self::WARP, Self::SHIFT, Self::ELEVATION, Self::ENLARGE];

    pub fn name(&self) -> &'static str {
        match self {
            Self::Elongation { .. } => "elongation",
            Self::Warp { .. } => "warp",
            Self::Shift { .. } => "shift",
            Self::Elevation { .. } => "elevation",
            Self::Enlarge { .. } => "enlarge",
        }
    }

    pub fn validate(&self) -> Result<(), DistortionError> {
        let ok = match *self {
            Self::Elongation { extent } | Self::Shift { extent } | Self::Elevation { extent } => extent > 0.0,
            Self::Warp { bend_angle_deg, arc_length } => bend_angle_deg > 0.0 && arc_length > 0.0,
            Self::Enlarge { factor } => factor > 1.0,
        };
        if ok {
            Ok(())
        } else {
            Err(DistortionError::InvalidTreatment(self.name()))
        }
    }

    /// Maps one physical-room point at the given extent in `[0, 1]`.
    pub fn transform_point(&self, room: &RoomModel, p: Vec3, extent: f64) -> Vec3 {
        match *self {
            Self::Elongation { extent: e } => {
                Vec3::new(p.x * (room.width + e * extent) / room.width, p.y, p.z)
            }
            Self::Shift { extent: e } => Vec3::new(p.x + e * extent, p.y, p.z),
            Self::Elevation { extent: e } => Vec3::new(p.x, p.y, p.z + e * extent),
            Self::Enlarge { factor } => {
                let f = 1.0 + (factor - 1.0) * extent;
                let c = room.center();
                Vec3::new(c.x + (p.x - c.x) * f, c.y + (p.y - c.y) * f, p.z * f)
            }
            Self::Warp { bend_angle_deg, arc_length } => {
                let c = room.center();
                let u = p.x - c.x;
                let wall_length = room.length + (arc_length - room.length) * extent;
                let s = (p.y - c.y) * wall_length / room.length;
                let curvature = bend_angle_deg.to_radians() * extent / wall_length;
                let phi = s * curvature;
                // sin(phi)/phi and (1 - cos(phi))/phi without cancellation.
                let (sinc, versinc) = if phi.abs() < 1e-12 {
                    (1.0, 0.0)
                } else {
                    (phi.sin() / phi, 2.0 * (phi / 2.0).sin().powi(2) / phi)
                };
                Vec3::new(
                    c.x + u * phi.cos() + s * versinc,
                    c.y + s * sinc - u * phi.sin(),
                    p.z,
                )
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Phase {
    Apply,
    Return,
    Hold,
}

/// Applied fraction of the treatment for a phase and in-phase progress.
/// Return retraces Apply backwards.
pub fn extent_for(phase: Phase, progress: f64) -> f64 {
    match phase {
        Phase::Apply | Phase::Hold => progress,
        Phase::Return => 1.0 - progress,
    }
}

/// Room geometry at `progress` through an Apply or Return segment.
pub fn treatment_geometry(
    room: &RoomModel,
    treatment: &DistortionTreatment,
    phase: Phase,
    progress: f64,
) -> Result<RoomGeometry, DistortionError> {
    if !(0.0..=1.0).contains(&progress) {
        return Err(DistortionError::InvalidProgress(progress));
    }
    if phase == Phase::Hold {
        return Err(DistortionError::InvalidPhase);
    }
    Ok(geometry_at_extent(room, treatment, extent_for(phase, progress)))
}

pub fn geometry_at_extent(room: &RoomModel, treatment: &DistortionTreatment, extent: f64) -> RoomGeometry {
    let base = room.geometry(GEOMETRY_SAMPLES_PER_WALL);
    let map = |v: &Vec3| treatment.transform_point(room, *v, extent);
    RoomGeometry { floor: base.floor.iter().map(map).collect(), ceiling: base.ceiling.iter().map(map).collect() }
}

/// Wall subdivision used for treatment geometry.
pub const GEOMETRY_SAMPLES_PER_WALL: usize = 24;

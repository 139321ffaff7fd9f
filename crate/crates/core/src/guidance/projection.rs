//! Head-relative map aids: a forward-up radar and a horizon compass.

use serde::{Deserialize, Serialize};

use super::GuidanceError;
use crate::geom::{wrap_angle, Vec2, Vec3};
use crate::trace::Pose;

/// Default half-angle of the field-of-view cone drawn on the radar.
pub const RADAR_FOV_HALF_ANGLE_DEG: f64 = 26.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadarBlip {
    /// Index into the input target list.
    pub target: usize,
    /// Radar-disc coordinates; `+y` is the walker's heading, unit radius = range.
    pub position: Vec2,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadarProjection {
    pub blips: Vec<RadarBlip>,
    pub fov_half_angle_deg: f64,
}

/// Head-relative frame: `x` to the walker's right, `y` straight ahead.
pub fn to_head_frame(head: &Pose, p: Vec2) -> Vec2 {
    let rel = p - head.position;
    let fwd = head.forward();
    let right = Vec2::new(fwd.y, -fwd.x);
    Vec2::new(rel.dot(right), rel.dot(fwd))
}

pub fn radar_project(head: &Pose, targets: &[Vec3], range: f64) -> Result<RadarProjection, GuidanceError> {
    if !(range > 0.0 && range.is_finite()) {
        return Err(GuidanceError::InvalidRange(range));
    }
    let blips = targets
        .iter()
        .enumerate()
        .filter_map(|(i, t)| {
            let local = to_head_frame(head, t.xy());
            (local.norm() <= range).then(|| RadarBlip { target: i, position: local / range })
        })
        .collect();
    Ok(RadarProjection { blips, fov_half_angle_deg: RADAR_FOV_HALF_ANGLE_DEG })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompassMark {
    pub target: usize,
    /// Degrees clockwise from the walker's heading, in `(-180, 180]`.
    pub bearing_deg: f64,
    /// Whole meters; only shown for targets in front.
    pub distance_m: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CompassProjection {
    pub front: Vec<CompassMark>,
    pub behind: Vec<CompassMark>,
}

/// Splits targets into those within ±90° of the heading (with rounded
/// distance) and those behind.
pub fn compass_project(head: &Pose, targets: &[Vec3]) -> CompassProjection {
    let mut out = CompassProjection::default();
    for (i, t) in targets.iter().enumerate() {
        let local = to_head_frame(head, t.xy());
        let bearing = wrap_angle(local.x.atan2(local.y)).to_degrees();
        if bearing.abs() <= 90.0 {
            out.front.push(CompassMark { target: i, bearing_deg: bearing, distance_m: Some(local.norm().round()) });
        } else {
            out.behind.push(CompassMark { target: i, bearing_deg: bearing, distance_m: None });
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn close(a: Vec2, b: Vec2) -> bool {
        a.distance(b) < 1e-9
    }

    #[test]
    fn ahead_maps_to_positive_y() {
        let head = Pose::new(Vec2::new(1.0, 1.0), std::f64::consts::FRAC_PI_2);
        let r = radar_project(&head, &[Vec3::new(1.0, 6.0, 0.0)], 10.0).unwrap();
        assert!(close(r.blips[0].position, Vec2::new(0.0, 0.5)));
        let behind = radar_project(&head, &[Vec3::new(1.0, -2.0, 0.0)], 10.0).unwrap();
        assert!(close(behind.blips[0].position, Vec2::new(0.0, -0.3)));
        let out_of_range = radar_project(&head, &[Vec3::new(1.0, 20.0, 0.0)], 10.0).unwrap();
        assert!(out_of_range.blips.is_empty());
        assert!(radar_project(&head, &[], 0.0).is_err());
    }

    #[test]
    fn compass_front_and_behind() {
        let head = Pose::new(Vec2::ZERO, 0.0);
        let c = compass_project(&head, &[Vec3::new(7.2, 0.0, 0.0)]);
        assert_eq!(c.front.len(), 1);
        assert_eq!(c.front[0].bearing_deg, 0.0);
        assert_eq!(c.front[0].distance_m, Some(7.0));
        // 135° clockwise from +x heading.
        let dir = Vec2::from_angle(-135f64.to_radians()) * 3.0;
        let c = compass_project(&head, &[dir.extend(0.0)]);
        assert_eq!(c.behind.len(), 1);
        assert!((c.behind[0].bearing_deg - 135.0).abs() < 1e-9);
    }

    #[test]
    fn compass_partition_over_full_circle() {
        let head = Pose::new(Vec2::new(2.0, -1.0), 0.7);
        let targets: Vec<Vec3> = (0..360)
            .map(|d| (head.position + Vec2::from_angle((d as f64 + 0.5).to_radians()) * 5.0).extend(0.0))
            .collect();
        let c = compass_project(&head, &targets);
        assert_eq!(c.front.len() + c.behind.len(), 360);
        let mut seen = vec![0; 360];
        for m in c.front.iter().chain(&c.behind) {
            seen[m.target] += 1;
        }
        assert!(seen.iter().all(|&n| n == 1));
        assert_eq!(c.front.len(), 180);
    }

    proptest! {
        #[test]
        fn rotating_walker_rotates_blips_opposite(theta in -6.3..6.3f64, h in -3.2..3.2f64,
                                                   tx in -8.0..8.0f64, ty in -8.0..8.0f64) {
            let head = Pose::new(Vec2::new(0.5, -0.25), h);
            let target = Vec3::new(tx, ty, 0.0);
            let a = radar_project(&head, &[target], 20.0).unwrap();
            let turned = Pose { heading: h + theta, ..head };
            let b = radar_project(&turned, &[target], 20.0).unwrap();
            prop_assert!(close(b.blips[0].position, a.blips[0].position.rotated(-theta)));
        }

        #[test]
        fn joint_translation_is_invisible(dx in -50.0..50.0f64, dy in -50.0..50.0f64, h in -3.2..3.2f64,
                                          tx in -8.0..8.0f64, ty in -8.0..8.0f64) {
            let head = Pose::new(Vec2::ZERO, h);
            let moved = Pose::new(Vec2::new(dx, dy), h);
            let a = radar_project(&head, &[Vec3::new(tx, ty, 0.0)], 20.0).unwrap();
            let b = radar_project(&moved, &[Vec3::new(tx + dx, ty + dy, 0.0)], 20.0).unwrap();
            prop_assert!(close(a.blips[0].position, b.blips[0].position));
        }
    }
}

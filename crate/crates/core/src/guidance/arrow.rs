use serde::{Deserialize, Serialize};

use crate::geom::Vec3;
use crate::trace::Pose;

/// Arrow height above the floor, meters.
pub const ARROW_HEIGHT: f64 = 0.40;
/// Horizontal distance ahead of the head, meters.
pub const ARROW_DISTANCE: f64 = 2.0;
/// Seconds for a full fade in or out.
pub const ARROW_FADE_SECONDS: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArrowGuideState {
    pub position: Vec3,
    pub pointing: Vec3,
    pub opacity: f64,
}

/// Places the arrow 2 m ahead of the head along the gaze at 40 cm height,
/// pointing horizontally at the target. Opacity ramps linearly toward 0
/// while a performance plays and back toward 1 otherwise.
pub fn arrow_pose(
    previous: Option<&ArrowGuideState>,
    head: &Pose,
    target: Vec3,
    performance_active: bool,
    dt: f64,
) -> ArrowGuideState {
    let gaze = head.forward();
    let base = head.position + gaze * ARROW_DISTANCE;
    let to_target = target.xy() - head.position;
    let dir = to_target.normalized().unwrap_or(gaze);
    let prev_opacity = previous.map_or(1.0, |p| p.opacity);
    let delta = dt / ARROW_FADE_SECONDS;
    let opacity = if performance_active { prev_opacity - delta } else { prev_opacity + delta }.clamp(0.0, 1.0);
    ArrowGuideState { position: base.extend(ARROW_HEIGHT), pointing: Vec3::new(dir.x, dir.y, 0.0), opacity }
}

/// Horizontal distance between the arrow and the head's floor projection.
pub fn arrow_offset(state: &ArrowGuideState, head: &Pose) -> f64 {
    state.position.xy().distance(head.position)
}


#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::Vec2;

    #[test]
    fn placed_two_meters_ahead_at_forty_centimeters() {
        let a = arrow_pose(None, &Pose::new(Vec2::ZERO, 0.0), Vec3::new(-3.0, 7.0, 0.0), false, 0.02);
        assert!(a.position.distance(Vec3::new(2.0, 0.0, 0.4)) < 1e-12);
    }

    #[test]
    fn points_north_at_a_northern_target() {
        let a = arrow_pose(None, &Pose::new(Vec2::ZERO, 1.0), Vec3::new(0.0, 12.0, 1.0), false, 0.02);
        assert!(a.pointing.distance(Vec3::new(0.0, 1.0, 0.0)) < 1e-12);
    }

    #[test]
    fn fades_out_during_performance_and_back_in() {
        let head = Pose::new(Vec2::ZERO, 0.0);
        let t = Vec3::new(5.0, 0.0, 0.0);
        let mut a = arrow_pose(None, &head, t, true, 0.02);
        for _ in 0..49 {
            a = arrow_pose(Some(&a), &head, t, true, 0.02);
        }
        assert_eq!(a.opacity, 0.0);
        a = arrow_pose(Some(&a), &head, t, false, 0.5);
        assert!((a.opacity - 0.5).abs() < 1e-12);
    }
}

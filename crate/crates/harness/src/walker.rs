use arstage_core::geom::wrap_angle;
use arstage_core::rng::{self, SimRng};
use arstage_core::twin::OcclusionScene;
use arstage_core::{Aabb2, Pose, Vec2};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::config::WalkerSpec;

/// What the walker's surroundings tell it this tick.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct GuideInput {
    /// Unit direction the active aid points in.
    pub bearing: Option<Vec2>,
    /// Stand still, e.g. while a performance plays in the walker's zone.
    pub hold: bool,
}

/// Turns toward the aid's bearing by at most `max_turn_rate·dt` radians,
/// then advances `speed·dt` along the new heading. Holds position when
/// told to or when there is no bearing.
pub fn guided_walker_step(pose: &Pose, guide: &GuideInput, speed: f64, max_turn_rate: f64, dt: f64) -> Pose {
    let Some(b) = guide.bearing else { return *pose };
    if guide.hold {
        return *pose;
    }
    let err = wrap_angle(b.angle() - pose.heading);
    let limit = max_turn_rate * dt;
    let heading = wrap_angle(pose.heading + err.clamp(-limit, limit));
    Pose::new(pose.position + Vec2::from_angle(heading) * (speed * dt), heading)
}

/// A scripted participant.
#[derive(Debug, Clone)]
pub enum Walker {
    Waypoint { points: Vec<Vec2>, next: usize, speed: f64 },
    Wander { speed: f64, turn_noise: f64, rng: SimRng },
    Guided { speed: f64, max_turn_rate: f64 },
}

/// Keeps the walker this far inside the venue bounds.
pub const BODY_RADIUS: f64 = 0.25;

impl Walker {
    /// Builds a walker and its starting pose. `default_start` is used when
    /// the spec does not fix one; `route` replaces an empty waypoint list.
    pub fn from_spec(spec: &WalkerSpec, default_start: Vec2, route: &[Vec2], seed: u64) -> (Self, Pose) {
        match spec {
            WalkerSpec::Waypoint { points, speed } => {
                let pts = if points.is_empty() { route.to_vec() } else { points.clone() };
                let start = pts.first().copied().unwrap_or(default_start);
                let heading = pts.get(1).and_then(|p| (*p - start).normalized()).map_or(0.0, |d| d.angle());
                (Walker::Waypoint { points: pts, next: 1, speed: *speed }, Pose::new(start, heading))
            }
            WalkerSpec::Wander { speed, turn_noise, start } => {
                let mut r = rng::stream(seed, 0x7761_6e64);
                let heading = r.random_range(-std::f64::consts::PI..std::f64::consts::PI);
                let w = Walker::Wander { speed: *speed, turn_noise: *turn_noise, rng: r };
                (w, Pose::new(start.unwrap_or(default_start), heading))
            }
            WalkerSpec::Guided { speed, max_turn_rate } => {
                let w = Walker::Guided { speed: *speed, max_turn_rate: max_turn_rate.to_radians() };
                (w, Pose::new(default_start, 0.0))
            }
            WalkerSpec::Policy { .. } => unreachable!("policy walkers are rejected at validation"),
        }
    }

    /// Advances one tick inside `bounds`, respecting scene barriers when a
    /// scene is given.
    pub fn step(&mut self, pose: &Pose, guide: &GuideInput, dt: f64, bounds: &Aabb2, scene: Option<&OcclusionScene>) -> Pose {
        if guide.hold {
            return *pose;
        }
        match self {
            Walker::Waypoint { points, next, speed } => {
                let mut p = pose.position;
                let mut heading = pose.heading;
                let mut budget = *speed * dt;
                while *next < points.len() && budget > 0.0 {
                    let to = points[*next] - p;
                    let d = to.norm();
                    if d > 0.0 {
                        heading = to.angle();
                    }
                    if d <= budget {
                        p = points[*next];
                        budget -= d;
                        *next += 1;
                    } else {
                        p = p + to * (budget / d);
                        budget = 0.0;
                    }
                }
                Pose::new(p, heading)
            }
            Walker::Wander { speed, turn_noise, rng } => {
                let z: f64 = rng.sample(StandardNormal);
                let mut heading = wrap_angle(pose.heading + *turn_noise * dt.sqrt() * z);
                let inner = inset(bounds);
                let mut proposed = pose.position + Vec2::from_angle(heading) * (*speed * dt);
                if !(inner.min.x..=inner.max.x).contains(&proposed.x) {
                    heading = wrap_angle(std::f64::consts::PI - heading);
                }
                if !(inner.min.y..=inner.max.y).contains(&proposed.y) {
                    heading = wrap_angle(-heading);
                }
                if heading != pose.heading {
                    proposed = pose.position + Vec2::from_angle(heading) * (*speed * dt);
                }
                let blocked = !inner.contains(proposed)
                    || scene.is_some_and(|s| !s.line_of_sight(pose.position, proposed).unwrap_or(false));
                if blocked {
                    Pose::new(pose.position, wrap_angle(heading + std::f64::consts::PI))
                } else {
                    Pose::new(proposed, heading)
                }
            }
            Walker::Guided { speed, max_turn_rate } => {
                let next = guided_walker_step(pose, guide, *speed, *max_turn_rate, dt);
                let inner = inset(bounds);
                let clamped = Vec2::new(
                    next.position.x.clamp(inner.min.x, inner.max.x),
                    next.position.y.clamp(inner.min.y, inner.max.y),
                );
                Pose::new(clamped, next.heading)
            }
        }
    }
}

fn inset(b: &Aabb2) -> Aabb2 {
    let r = BODY_RADIUS.min(b.width() / 2.0).min(b.height() / 2.0);
    Aabb2::new(b.min + Vec2::new(r, r), b.max - Vec2::new(r, r))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dead_ahead_advances_speed_dt() {
        let p = Pose::new(Vec2::new(1.0, 2.0), 0.0);
        let g = GuideInput { bearing: Some(Vec2::new(1.0, 0.0)), hold: false };
        let n = guided_walker_step(&p, &g, 1.4, std::f64::consts::PI, 0.1);
        assert!((n.position - Vec2::new(1.14, 2.0)).norm() < 1e-12);
        assert_eq!(n.heading, 0.0);
    }

    #[test]
    fn hold_stands_still() {
        let p = Pose::new(Vec2::new(1.0, 2.0), 0.3);
        let g = GuideInput { bearing: Some(Vec2::new(0.0, 1.0)), hold: true };
        assert_eq!(guided_walker_step(&p, &g, 1.4, 3.0, 0.1), p);
    }

    #[test]
    fn waypoint_walker_corners_exactly() {
        let spec = WalkerSpec::Waypoint { points: vec![Vec2::ZERO, Vec2::new(1.0, 0.0), Vec2::new(1.0, 1.0)], speed: 1.0 };
        let (mut w, mut p) = Walker::from_spec(&spec, Vec2::ZERO, &[], 0);
        let b = Aabb2::new(Vec2::new(-5.0, -5.0), Vec2::new(5.0, 5.0));
        for _ in 0..3 {
            p = w.step(&p, &GuideInput::default(), 0.5, &b, None);
        }
        assert!((p.position - Vec2::new(1.0, 0.5)).norm() < 1e-12);
        for _ in 0..10 {
            p = w.step(&p, &GuideInput::default(), 0.5, &b, None);
        }
        assert_eq!(p.position, Vec2::new(1.0, 1.0));
    }

    #[test]
    fn wanderer_stays_in_bounds() {
        let spec = WalkerSpec::Wander { speed: 1.4, turn_noise: 2.0, start: None };
        let b = Aabb2::new(Vec2::ZERO, Vec2::new(3.0, 2.0));
        let (mut w, mut p) = Walker::from_spec(&spec, Vec2::new(1.5, 1.0), &[], 9);
        for _ in 0..100_000 {
            p = w.step(&p, &GuideInput::default(), 0.05, &b, None);
            assert!(b.contains(p.position));
        }
    }
}

use std::collections::VecDeque;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::GuidanceError;
use crate::geom::Vec3;
use crate::rng::{self, SimRng};
use crate::trace::Pose;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ParticleConfig {
    pub count: usize,
    /// m/s
    pub speed: f64,
    /// Direction noise, degrees per square-root second.
    pub noise_deg_per_sqrt_s: f64,
    /// Seconds between exact re-aims at the target.
    pub reset_period: f64,
    pub respawn_radius: f64,
    /// Respawn sphere center, meters ahead of the head.
    pub respawn_forward: f64,
    /// A particle this close to the target counts as arrived.
    pub arrive_radius: f64,
    pub max_age: f64,
    /// Seconds of trail history kept per particle.
    pub streak_seconds: f64,
}

impl Default for ParticleConfig {
    fn default() -> Self {
        Self {
            count: 4,
            speed: 1.0,
            noise_deg_per_sqrt_s: 15.0,
            reset_period: 1.0,
            respawn_radius: 0.3,
            respawn_forward: 0.2,
            arrive_radius: 0.5,
            max_age: 30.0,
            streak_seconds: 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GuideParticle {
    pub position: Vec3,
    pub velocity: Vec3,
    pub age: f64,
    pub since_reset: f64,
    /// Set on the tick the velocity was re-aimed (or the particle respawned).
    pub just_reset: bool,
    pub streak: VecDeque<Vec3>,
}

/// Guidance particles drifting toward the next target.
#[derive(Debug, Clone)]
pub struct ParticleGuideState {
    pub particles: Vec<GuideParticle>,
    pub target: Vec3,
    pub config: ParticleConfig,
    rng: SimRng,
}

impl ParticleGuideState {
    pub fn new(config: ParticleConfig, head: &Pose, target: Vec3, seed: u64) -> Result<Self, GuidanceError> {
        if !(1..=6).contains(&config.count) {
            return Err(GuidanceError::ParticleCount(config.count));
        }
        if !(config.speed > 0.0 && config.reset_period > 0.0) {
            return Err(GuidanceError::InvalidConfig("speed and reset period must be positive".into()));
        }
        let mut state = Self { particles: Vec::with_capacity(config.count), target, config, rng: rng::seeded(seed) };
        for _ in 0..state.config.count {
            let p = state.spawn(head);
            state.particles.push(p);
        }
        Ok(state)
    }

    fn spawn(&mut self, head: &Pose) -> GuideParticle {
        let center = head.head() + head.forward().extend(0.0) * self.config.respawn_forward;
        // Uniform in a ball: rejection sample the unit cube.
        let offset = loop {
            let v = Vec3::new(
                self.rng.random_range(-1.0..1.0),
                self.rng.random_range(-1.0..1.0),
                self.rng.random_range(-1.0..1.0),
            );
            if v.dot(v) <= 1.0 {
                break v * self.config.respawn_radius;
            }
        };
        let position = center + offset;
        GuideParticle {
            position,
            velocity: self.aim(position),
            age: 0.0,
            since_reset: 0.0,
            just_reset: true,
            streak: VecDeque::from([position]),
        }
    }

    fn aim(&self, from: Vec3) -> Vec3 {
        (self.target - from).normalized().unwrap_or(Vec3::new(0.0, 0.0, 1.0)) * self.config.speed
    }

    /// Advances every particle by `dt`: integrate, perturb the heading, and
    /// re-aim exactly at the target each `reset_period` of particle age.
    /// Arrived or expired particles respawn near the head.
    pub fn step(&mut self, head: &Pose, target: Vec3, dt: f64) {
        self.target = target;
        let sigma = self.config.noise_deg_per_sqrt_s.to_radians() * dt.sqrt();
        let max_streak = (self.config.streak_seconds / dt).ceil() as usize + 1;
        for k in 0..self.particles.len() {
            let mut p = self.particles[k].clone();
            p.just_reset = false;
            p.position += p.velocity * dt;
            p.age += dt;
            p.since_reset += dt;
            let n1: f64 = StandardNormal.sample(&mut self.rng);
            let n2: f64 = StandardNormal.sample(&mut self.rng);
            p.velocity = perturb(p.velocity, n1 * sigma, n2 * sigma);
            if p.since_reset >= self.config.reset_period - 1e-9 {
                p.since_reset -= self.config.reset_period;
                p.velocity = self.aim(p.position);
                p.just_reset = true;
            }
            p.streak.push_back(p.position);
            while p.streak.len() > max_streak {
                p.streak.pop_front();
            }
            let arrived = p.position.distance(self.target) <= self.config.arrive_radius;
            if arrived || p.age >= self.config.max_age {
                p = self.spawn(head);
            }
            self.particles[k] = p;
        }
    }

    /// Mean unit direction of travel across particles.
    pub fn mean_direction(&self) -> Option<Vec3> {
        let sum = self
            .particles
            .iter()
            .filter_map(|p| p.velocity.normalized())
            .fold(Vec3::ZERO, |a, b| a + b);
        sum.normalized()
    }
}

/// Rotates `v` by small angles about two axes perpendicular to it,
/// preserving its length.
fn perturb(v: Vec3, a: f64, b: f64) -> Vec3 {
    let speed = v.norm();
    let Some(u) = v.normalized() else { return v };
    let helper = if u.z.abs() < 0.9 { Vec3::new(0.0, 0.0, 1.0) } else { Vec3::new(1.0, 0.0, 0.0) };
    let e1 = u.cross(helper).normalized().expect("helper is not parallel");
    let e2 = u.cross(e1);
    (u + e1 * a + e2 * b).normalized().unwrap_or(u) * speed
}

/// Pure form of [`ParticleGuideState::step`].
pub fn particle_step(state: &ParticleGuideState, head: &Pose, target: Vec3, dt: f64) -> ParticleGuideState {
    let mut next = state.clone();
    next.step(head, target, dt);
    next
}

/// Angle between a particle's velocity and the direction to the target.
pub fn aim_error(p: &GuideParticle, target: Vec3) -> f64 {
    match ((target - p.position).normalized(), p.velocity.normalized()) {
        (Some(a), Some(b)) => a.dot(b).clamp(-1.0, 1.0).acos(),
        _ => 0.0,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::Vec2;

    fn head() -> Pose {
        Pose::new(Vec2::ZERO, 0.0)
    }

    #[test]
    fn count_outside_one_to_six_rejected() {
        for n in [0, 7] {
            let cfg = ParticleConfig { count: n, ..Default::default() };
            assert!(ParticleGuideState::new(cfg, &head(), Vec3::new(5.0, 0.0, 1.0), 1).is_err());
        }
    }

    #[test]
    fn velocity_points_at_target_right_after_reset() {
        let target = Vec3::new(8.0, 3.0, 1.0);
        let mut s = ParticleGuideState::new(ParticleConfig::default(), &head(), target, 3).unwrap();
        let mut resets = 0;
        for _ in 0..500 {
            s.step(&head(), target, 0.02);
            for p in s.particles.iter().filter(|p| p.just_reset) {
                assert!(aim_error(p, target) <= 1e-6);
                resets += 1;
            }
        }
        assert!(resets > 0);
    }

    #[test]
    fn zero_noise_travels_straight() {
        let cfg = ParticleConfig { count: 1, noise_deg_per_sqrt_s: 0.0, arrive_radius: 0.05, ..Default::default() };
        let target = Vec3::new(5.0, 0.0, 1.6);
        let mut s = ParticleGuideState::new(cfg, &head(), target, 9).unwrap();
        let start = s.particles[0].position;
        let line = (target - start).normalized().unwrap();
        for _ in 0..100 {
            s.step(&head(), target, 0.02);
            let off = s.particles[0].position - start;
            let lateral = off - line * off.dot(line);
            assert!(lateral.norm() < 1e-9);
        }
    }

    #[test]
    fn streak_history_is_bounded() {
        let target = Vec3::new(30.0, 0.0, 1.0);
        let mut s = ParticleGuideState::new(ParticleConfig::default(), &head(), target, 5).unwrap();
        for _ in 0..200 {
            s.step(&head(), target, 0.02);
        }
        assert!(s.particles.iter().all(|p| p.streak.len() <= 26));
    }

    #[test]
    fn arrived_particles_respawn_near_head() {
        let target = Vec3::new(1.0, 0.0, 1.6);
        let mut s = ParticleGuideState::new(ParticleConfig::default(), &head(), target, 11).unwrap();
        for _ in 0..300 {
            s.step(&head(), target, 0.02);
            assert_eq!(s.particles.len(), 4);
            let spawn_center = Vec3::new(0.2, 0.0, 1.6);
            for p in s.particles.iter().filter(|p| p.age == 0.0) {
                assert!(p.position.distance(spawn_center) <= 0.3 + 1e-12);
            }
        }
    }
}

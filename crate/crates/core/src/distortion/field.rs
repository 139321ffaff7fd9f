use rand::Rng;
use serde::{Deserialize, Serialize};

use super::room::Aabb3;
use crate::geom::Vec3;
use crate::rng::{self, SimRng};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ParticleFieldConfig {
    /// Particles per cubic meter.
    pub density: f64,
    pub radius: f64,
    /// m/s
    pub speed: f64,
    /// Mean seconds between random direction changes.
    pub mean_turn_interval: f64,
}

impl Default for ParticleFieldConfig {
    fn default() -> Self {
        Self { density: 712.0 / 1000.0, radius: 0.0192, speed: 0.01, mean_turn_interval: 5.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FieldParticle {
    pub position: Vec3,
    pub direction: Vec3,
}

/// Slow ambient particles filling the current virtual volume.
#[derive(Debug, Clone)]
pub struct ParticleField {
    pub particles: Vec<FieldParticle>,
    pub config: ParticleFieldConfig,
    rng: SimRng,
}

impl ParticleField {
    pub fn new(config: ParticleFieldConfig, bounds: &Aabb3, seed: u64) -> Self {
        let mut f = Self { particles: Vec::new(), config, rng: rng::seeded(seed) };
        f.rescale(bounds);
        f
    }

    pub fn target_count(&self, bounds: &Aabb3) -> usize {
        (self.config.density * bounds.volume()).round() as usize
    }

    fn random_direction(&mut self) -> Vec3 {
        loop {
            let v = Vec3::new(
                self.rng.random_range(-1.0..1.0),
                self.rng.random_range(-1.0..1.0),
                self.rng.random_range(-1.0..1.0),
            );
            let n = v.norm();
            if n > 1e-3 && n <= 1.0 {
                return v / n;
            }
        }
    }

    fn rescale(&mut self, bounds: &Aabb3) {
        let target = self.target_count(bounds);
        self.particles.truncate(target);
        while self.particles.len() < target {
            let position = Vec3::new(
                self.rng.random_range(bounds.min.x..=bounds.max.x),
                self.rng.random_range(bounds.min.y..=bounds.max.y),
                self.rng.random_range(bounds.min.z..=bounds.max.z),
            );
            let direction = self.random_direction();
            self.particles.push(FieldParticle { position, direction });
        }
    }

    /// Moves every particle at constant speed, reflecting off `bounds`,
    /// re-randomizing directions on a Poisson schedule, and matching the
    /// population to the density of the current volume.
    pub fn step(&mut self, bounds: &Aabb3, dt: f64) {
        let turn_p = 1.0 - (-dt / self.config.mean_turn_interval).exp();
        for k in 0..self.particles.len() {
            let mut p = self.particles[k];
            p.position += p.direction * (self.config.speed * dt);
            let (pos, dir) = reflect_into(p.position, p.direction, bounds);
            p.position = pos;
            p.direction = dir;
            if self.rng.random::<f64>() < turn_p {
                p.direction = self.random_direction();
            }
            self.particles[k] = p;
        }
        self.rescale(bounds);
    }

    pub fn all_inside(&self, bounds: &Aabb3) -> bool {
        self.particles.iter().all(|p| bounds.contains(p.position))
    }
}

fn reflect_axis(x: f64, d: f64, lo: f64, hi: f64) -> (f64, f64) {
    if x < lo {
        let r = 2.0 * lo - x;
        if r <= hi { (r, d.abs()) } else { (lo, d.abs()) }
    } else if x > hi {
        let r = 2.0 * hi - x;
        if r >= lo { (r, -d.abs()) } else { (hi, -d.abs()) }
    } else {
        (x, d)
    }
}

fn reflect_into(p: Vec3, d: Vec3, b: &Aabb3) -> (Vec3, Vec3) {
    let (x, dx) = reflect_axis(p.x, d.x, b.min.x, b.max.x);
    let (y, dy) = reflect_axis(p.y, d.y, b.min.y, b.max.y);
    let (z, dz) = reflect_axis(p.z, d.z, b.min.z, b.max.z);
    (Vec3::new(x, y, z), Vec3::new(dx, dy, dz))
}

pub fn particle_field_step(field: &ParticleField, bounds: &Aabb3, dt: f64) -> ParticleField {
    let mut next = field.clone();
    next.step(bounds, dt);
    next
}

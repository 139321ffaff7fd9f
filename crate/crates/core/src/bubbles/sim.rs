use std::f64::consts::TAU;
use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::BubbleError;
use crate::geom::{Vec2, Vec3};
use crate::rng::{self, SimRng};

pub const BUBBLE_COUNT: usize = 10;
pub const BUBBLE_DIAMETER: f64 = 0.8;
/// m/s, one meter every five seconds.
pub const BUBBLE_SPEED: f64 = 0.2;
pub const FENCE_SIDE: f64 = 3.3;
pub const DEFAULT_ALTITUDE: f64 = 1.6;
/// Mean seconds between random heading changes.
pub const MEAN_REAIM_INTERVAL: f64 = 8.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Chord {
    EMaj,
    Em,
    FMaj7,
    GMaj,
    G7,
    Am,
    Bdim,
    Bm5,
    Cmaj,
    Dm,
}

impl Chord {
    pub const ALL: [Chord; BUBBLE_COUNT] = [
        Chord::EMaj,
        Chord::Em,
        Chord::FMaj7,
        Chord::GMaj,
        Chord::G7,
        Chord::Am,
        Chord::Bdim,
        Chord::Bm5,
        Chord::Cmaj,
        Chord::Dm,
    ];
}

impl fmt::Display for Chord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

/// Square fence centered on `center`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PlaySpace {
    pub side: f64,
    pub center: Vec2,
}

impl Default for PlaySpace {
    fn default() -> Self {
        Self { side: FENCE_SIDE, center: Vec2::ZERO }
    }
}

impl PlaySpace {
    pub fn validate(&self) -> Result<(), BubbleError> {
        if self.side.is_finite() && self.side > BUBBLE_DIAMETER && self.center.is_finite() {
            Ok(())
        } else {
            Err(BubbleError::InvalidSpace)
        }
    }

    /// Region available to bubble centers: the fence inset by one radius.
    pub fn inset_bounds(&self) -> (Vec2, Vec2) {
        let h = self.side / 2.0 - BUBBLE_DIAMETER / 2.0;
        (self.center - Vec2::new(h, h), self.center + Vec2::new(h, h))
    }

    pub fn contains_center(&self, p: Vec2) -> bool {
        let (lo, hi) = self.inset_bounds();
        p.x >= lo.x && p.x <= hi.x && p.y >= lo.y && p.y <= hi.y
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bubble {
    pub id: usize,
    pub chord: Chord,
    pub center: Vec3,
    /// Direction of horizontal travel, radians.
    pub heading: f64,
}

impl Bubble {
    pub fn velocity(&self) -> Vec2 {
        Vec2::from_angle(self.heading) * BUBBLE_SPEED
    }

    pub fn radius(&self) -> f64 {
        BUBBLE_DIAMETER / 2.0
    }
}

/// Ten bubbles with chords in list order, at random positions and
/// headings inside the inset fence.
pub fn spawn_bubbles(space: &PlaySpace, altitude: f64, rng: &mut SimRng) -> Result<Vec<Bubble>, BubbleError> {
    space.validate()?;
    if !(altitude > 0.0 && altitude.is_finite()) {
        return Err(BubbleError::InvalidAltitude(altitude));
    }
    let (lo, hi) = space.inset_bounds();
    Ok(Chord::ALL
        .iter()
        .enumerate()
        .map(|(id, &chord)| {
            let x = rng.random_range(lo.x..=hi.x);
            let y = rng.random_range(lo.y..=hi.y);
            Bubble { id, chord, center: Vec3::new(x, y, altitude), heading: rng.random_range(0.0..TAU) }
        })
        .collect())
}

/// Folds an unbounded 1D motion into `[lo, hi]`, returning the position and
/// whether the direction ended up reversed (odd number of bounces).
fn fold(x: f64, lo: f64, hi: f64) -> (f64, bool) {
    let w = hi - lo;
    let r = (x - lo).rem_euclid(2.0 * w);
    if r <= w {
        (lo + r, false)
    } else {
        (hi - (r - w), true)
    }
}

/// Straight motion at constant speed for `dt` with exact specular bounces
/// off the inset fence. Altitude never changes.
pub fn glide(b: &Bubble, space: &PlaySpace, dt: f64) -> Bubble {
    let (lo, hi) = space.inset_bounds();
    let v = b.velocity();
    let (x, flip_x) = fold(b.center.x + v.x * dt, lo.x, hi.x);
    let (y, flip_y) = fold(b.center.y + v.y * dt, lo.y, hi.y);
    let heading = if flip_x || flip_y {
        let (s, c) = b.heading.sin_cos();
        f64::atan2(if flip_y { -s } else { s }, if flip_x { -c } else { c })
    } else {
        b.heading
    };
    Bubble { center: Vec3::new(x, y, b.center.z), heading, ..*b }
}

/// Advances every bubble by `dt` with [`glide`], then lets each pick a
/// fresh uniform heading with probability `1 - exp(-dt / 8 s)`.
pub fn bubble_step(bubbles: &[Bubble], space: &PlaySpace, dt: f64, rng: &mut SimRng) -> Vec<Bubble> {
    let reaim = 1.0 - (-dt / MEAN_REAIM_INTERVAL).exp();
    bubbles
        .iter()
        .map(|b| {
            let mut next = glide(b, space, dt);
            if rng.random::<f64>() < reaim {
                next.heading = rng.random_range(0.0..TAU);
            }
            next
        })
        .collect()
}

/// True iff the head is within one bubble radius of the center (closed).
pub fn head_inside(bubble: &Bubble, head: Vec3) -> bool {
    head.distance(bubble.center) <= bubble.radius()
}

pub fn accessibility_set_height(bubbles: &[Bubble], altitude: f64) -> Result<Vec<Bubble>, BubbleError> {
    if !(altitude > 0.0 && altitude.is_finite()) {
        return Err(BubbleError::InvalidAltitude(altitude));
    }
    Ok(bubbles
        .iter()
        .map(|b| Bubble { center: Vec3::new(b.center.x, b.center.y, altitude), ..*b })
        .collect())
}

/// A bubble session with its own RNG stream.
#[derive(Debug, Clone)]
pub struct BubbleField {
    pub bubbles: Vec<Bubble>,
    pub space: PlaySpace,
    rng: SimRng,
}

impl BubbleField {
    pub fn new(space: PlaySpace, altitude: f64, seed: u64) -> Result<Self, BubbleError> {
        let mut rng = rng::seeded(seed);
        let bubbles = spawn_bubbles(&space, altitude, &mut rng)?;
        Ok(Self { bubbles, space, rng })
    }

    pub fn step(&mut self, dt: f64) {
        self.bubbles = bubble_step(&self.bubbles, &self.space, dt, &mut self.rng);
    }

    pub fn set_height(&mut self, altitude: f64) -> Result<(), BubbleError> {
        self.bubbles = accessibility_set_height(&self.bubbles, altitude)?;
        Ok(())
    }
}

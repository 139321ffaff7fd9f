use crate::geom::Vec3;

/// Inverse-distance gain with a 1 m clamp: `min(1, 1/d)`.
pub fn audio_gain(listener: Vec3, source: Vec3) -> f64 {
    let d = listener.distance(source);
    if d <= 1.0 {
        1.0
    } else {
        1.0 / d
    }
}

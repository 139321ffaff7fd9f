use image::ImageFormat;

use super::TwinError;
use crate::geom::Vec2;

/// Luminance below this fraction of full scale counts as occupied.
pub const OCCUPANCY_THRESHOLD: f64 = 0.5;

/// Calibrated grayscale floorplan used as a tracing backdrop.
#[derive(Debug, Clone, PartialEq)]
pub struct FloorPlanImage {
    pub width_px: u32,
    pub height_px: u32,
    /// Row-major luminance, top row first.
    pub pixels: Vec<u8>,
    pub pixels_per_meter: f64,
}

pub fn load_floorplan(bytes: &[u8], pixels_per_meter: f64) -> Result<FloorPlanImage, TwinError> {
    if !(pixels_per_meter > 0.0 && pixels_per_meter.is_finite()) {
        return Err(TwinError::Scale(pixels_per_meter));
    }
    let img = image::load_from_memory_with_format(bytes, ImageFormat::Png)
        .map_err(|e| TwinError::Decode(e.to_string()))?
        .to_luma8();
    let (width_px, height_px) = img.dimensions();
    Ok(FloorPlanImage { width_px, height_px, pixels: img.into_raw(), pixels_per_meter })
}

impl FloorPlanImage {
    /// Physical extent `(width, height)` in meters.
    pub fn extent_m(&self) -> (f64, f64) {
        (
            f64::from(self.width_px) / self.pixels_per_meter,
            f64::from(self.height_px) / self.pixels_per_meter,
        )
    }

    pub fn luminance(&self, px: u32, py: u32) -> Option<f64> {
        if px >= self.width_px || py >= self.height_px {
            return None;
        }
        let i = py as usize * self.width_px as usize + px as usize;
        Some(f64::from(self.pixels[i]) / 255.0)
    }

    pub fn is_occupied(&self, px: u32, py: u32) -> bool {
        self.luminance(px, py).is_some_and(|l| l < OCCUPANCY_THRESHOLD)
    }

    /// Floor coordinates of a pixel center; image rows grow downward, `y` grows up.
    pub fn pixel_to_world(&self, px: u32, py: u32) -> Vec2 {
        Vec2::new(
            (f64::from(px) + 0.5) / self.pixels_per_meter,
            (f64::from(self.height_px) - f64::from(py) - 0.5) / self.pixels_per_meter,
        )
    }

    pub fn occupied_fraction(&self) -> f64 {
        if self.pixels.is_empty() {
            return 0.0;
        }
        let n = self
            .pixels
            .iter()
            .filter(|&&p| f64::from(p) / 255.0 < OCCUPANCY_THRESHOLD)
            .count();
        n as f64 / self.pixels.len() as f64
    }
}

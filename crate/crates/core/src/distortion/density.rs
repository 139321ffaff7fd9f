use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use super::metrics::Window;
use super::room::RoomModel;
use super::timeline::TreatmentTimeline;
use crate::trace::LocomotionTrace;

/// Offset of the first window after a phase starts, and of the second
/// window's end before the phase ends.
pub const WINDOW_MARGIN: f64 = 2.0;
pub const WINDOW_LENGTH: f64 = 4.0;

/// The two sampling windows of every Apply and Return phase, in trial time.
pub fn phase_windows(timeline: &TreatmentTimeline) -> Vec<Window> {
    let mut out = Vec::new();
    for (_, start, end) in timeline.stimulus_spans() {
        out.push(Window::new(start + WINDOW_MARGIN, start + WINDOW_MARGIN + WINDOW_LENGTH));
        out.push(Window::new(end - WINDOW_MARGIN - WINDOW_LENGTH, end - WINDOW_MARGIN));
    }
    out
}

/// Occupancy counts over floor tiles. `counts[iy * nx + ix]`, with tile
/// `(0, 0)` at the room's minimum corner; edge tiles may extend past the room.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityMap {
    pub nx: usize,
    pub ny: usize,
    pub tile: f64,
    pub windows: Vec<Window>,
    pub counts: Vec<u64>,
    /// In-window samples that fell outside the room.
    pub outside: u64,
}

impl DensityMap {
    pub fn empty(room: &RoomModel, windows: Vec<Window>) -> Self {
        let nx = (room.width / room.tile - 1e-9).ceil() as usize;
        let ny = (room.length / room.tile - 1e-9).ceil() as usize;
        Self { nx, ny, tile: room.tile, windows, counts: vec![0; nx * ny], outside: 0 }
    }

    pub fn get(&self, ix: usize, iy: usize) -> u64 {
        self.counts[iy * self.nx + ix]
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    fn in_windows(&self, t: f64) -> bool {
        self.windows.iter().any(|w| w.contains(t))
    }

    /// Adds every in-window sample once, even where windows overlap.
    /// `origin` is the trace time of trial second zero.
    pub fn accumulate(&mut self, room: &RoomModel, trace: &LocomotionTrace, origin: f64) {
        for s in trace.samples() {
            if !self.in_windows(s.t - origin) {
                continue;
            }
            if !room.contains(s.position) {
                self.outside += 1;
                continue;
            }
            let ix = ((s.position.x / self.tile) as usize).min(self.nx - 1);
            let iy = ((s.position.y / self.tile) as usize).min(self.ny - 1);
            self.counts[iy * self.nx + ix] += 1;
        }
    }

    /// Binary PGM, counts scaled so the busiest tile is white. Row 0 of the
    /// image is the tile row farthest from the origin.
    pub fn to_pgm(&self) -> Vec<u8> {
        let max = self.counts.iter().copied().max().unwrap_or(0).max(1);
        let mut out = format!("P5\n{} {}\n255\n", self.nx, self.ny).into_bytes();
        for iy in (0..self.ny).rev() {
            for ix in 0..self.nx {
                out.push(((self.get(ix, iy) * 255 + max / 2) / max) as u8);
            }
        }
        out
    }

    pub fn metadata_json(&self) -> serde_json::Value {
        serde_json::json!({
            "tile_m": self.tile,
            "nx": self.nx,
            "ny": self.ny,
            "indexing": "row-major from room min corner; image rows top = max y",
            "windows": self.windows,
            "window_length_s": WINDOW_LENGTH,
            "window_margin_s": WINDOW_MARGIN,
            "total": self.total(),
            "outside": self.outside,
        })
    }

    /// Pearson chi-square test against occupancy proportional to each
    /// tile's area inside the room.
    pub fn chi_square_uniformity(&self, room: &RoomModel, alpha: f64) -> ChiSquareResult {
        let n = self.total() as f64;
        let area = room.floor_area();
        let mut statistic = 0.0;
        for iy in 0..self.ny {
            for ix in 0..self.nx {
                let w = (room.width - ix as f64 * self.tile).min(self.tile);
                let h = (room.length - iy as f64 * self.tile).min(self.tile);
                let expected = n * w * h / area;
                let d = self.get(ix, iy) as f64 - expected;
                statistic += d * d / expected;
            }
        }
        let dof = (self.nx * self.ny - 1) as f64;
        let critical = ChiSquared::new(dof).expect("positive dof").inverse_cdf(1.0 - alpha);
        ChiSquareResult { statistic, dof, critical, rejected: statistic > critical }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChiSquareResult {
    pub statistic: f64,
    pub dof: f64,
    pub critical: f64,
    pub rejected: bool,
}

/// Density map over all traces using the default two-window sampling of
/// each stimulus phase. Each trace's first sample is trial second zero.
pub fn density_map(traces: &[LocomotionTrace], room: &RoomModel, timeline: &TreatmentTimeline) -> DensityMap {
    let mut map = DensityMap::empty(room, phase_windows(timeline));
    for tr in traces {
        if let Some((t0, _)) = tr.span() {
            map.accumulate(room, tr, t0);
        }
    }
    map
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::Vec2;
    use crate::rng;
    use crate::trace::TraceSample;
    use rand::Rng;

    fn still(p: Vec2) -> LocomotionTrace {
        LocomotionTrace::new((0..=600).map(|k| TraceSample { t: k as f64 * 0.1, position: p, heading: 0.0 }).collect())
            .unwrap()
    }

    #[test]
    fn windows_sit_inside_each_phase() {
        let w = phase_windows(&TreatmentTimeline::default());
        assert_eq!(w.len(), 8);
        assert_eq!((w[0].start, w[0].end), (2.0, 6.0));
        assert_eq!((w[1].start, w[1].end), (4.0, 8.0));
        assert_eq!((w[2].start, w[2].end), (17.0, 21.0));
    }

    #[test]
    fn grid_covers_room() {
        let m = DensityMap::empty(&RoomModel::default(), vec![]);
        assert_eq!((m.nx, m.ny), (7, 9));
    }

    #[test]
    fn stationary_walker_fills_one_tile() {
        let room = RoomModel::default();
        let map = density_map(&[still(Vec2::new(1.0, 2.0))], &room, &TreatmentTimeline::default());
        let nonzero: Vec<_> = map.counts.iter().enumerate().filter(|(_, c)| **c > 0).collect();
        assert_eq!(nonzero.len(), 1);
        assert_eq!(nonzero[0].0, 3 * 7 + 1);
        // Union of windows per phase is [s+2, s+8]: 61 samples at 10 Hz.
        assert_eq!(map.total(), 4 * 61);
    }

    #[test]
    fn uniform_positions_pass_chi_square() {
        let room = RoomModel::default();
        let mut r = rng::seeded(2024);
        let samples = (0..100_000)
            .map(|k| TraceSample {
                t: k as f64,
                position: Vec2::new(r.random_range(0.0..room.width), r.random_range(0.0..room.length)),
                heading: 0.0,
            })
            .collect();
        let tr = LocomotionTrace::new(samples).unwrap();
        let mut map = DensityMap::empty(&room, vec![Window::new(0.0, 1e6)]);
        map.accumulate(&room, &tr, 0.0);
        assert_eq!(map.total(), 100_000);
        let res = map.chi_square_uniformity(&room, 0.01);
        assert!(!res.rejected, "{res:?}");
        assert!((res.critical - 90.80).abs() < 0.01, "{}", res.critical);
    }

    #[test]
    fn pgm_header_and_size() {
        let room = RoomModel::default();
        let map = density_map(&[still(Vec2::new(1.0, 2.0))], &room, &TreatmentTimeline::default());
        let pgm = map.to_pgm();
        let header = b"P5\n7 9\n255\n";
        assert_eq!(&pgm[..header.len()], header);
        assert_eq!(pgm.len(), header.len() + 63);
        assert_eq!(pgm.iter().skip(header.len()).filter(|b| **b == 255).count(), 1);
    }
}

//! Seeded graph segmentation: the GTVcut cellular automaton (shortest-path
//! CA with GrowCut-style attack rule) and the Random Walker with intensity
//! or SUV edge weights.

mod ca;
mod rw;
pub(crate) mod solver;

pub use ca::{ca_grow, gtvcut_pipeline, Similarity};
pub use rw::{
    random_walker, rw_build, rw_build_from_values, rw_weighted, suv_convert, RwGraph,
    DEFAULT_BETA, DEFAULT_PROB_THRESHOLD,
};

use crate::error::{CoreError, Result};

/// Foreground and background seed coordinates.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SeedSet {
    pub foreground: Vec<(u32, u32)>,
    pub background: Vec<(u32, u32)>,
}

impl SeedSet {
    pub fn new(foreground: Vec<(u32, u32)>, background: Vec<(u32, u32)>) -> Result<Self> {
        for f in &foreground {
            if background.contains(f) {
                return Err(CoreError::InvalidInput(format!("seed {f:?} is in both classes")));
            }
        }
        if foreground.is_empty() || background.is_empty() {
            return Err(CoreError::InvalidInput("both seed classes must be non-empty".into()));
        }
        Ok(Self { foreground, background })
    }

    pub fn check_bounds(&self, width: u32, height: u32) -> Result<()> {
        for &(x, y) in self.foreground.iter().chain(&self.background) {
            if x >= width || y >= height {
                return Err(CoreError::InvalidInput(format!(
                    "seed ({x},{y}) outside {width}x{height}"
                )));
            }
        }
        Ok(())
    }
}

/// Adaptive seed layout for a crop of the given size.
///
/// Crops with more than 100 pixels get nine foreground seeds around the
/// center and eight background seeds at the border corners and edge
/// midpoints; smaller crops (at least 5x5) get five foreground seeds and the
/// four corners.
pub fn adaptive_seeds(crop_w: u32, crop_h: u32) -> Result<SeedSet> {
    if crop_w < 5 || crop_h < 5 {
        return Err(CoreError::InvalidParameter(format!(
            "crop {crop_w}x{crop_h} too small for seeding (needs 5x5)"
        )));
    }
    let cx = crop_w / 2;
    let cy = crop_h / 2;
    let last_x = crop_w - 1;
    let last_y = crop_h - 1;
    if (crop_w as u64) * (crop_h as u64) > 100 {
        let mut fg = Vec::with_capacity(9);
        for dy in -1i32..=1 {
            for dx in -1i32..=1 {
                fg.push(((cx as i32 + dx) as u32, (cy as i32 + dy) as u32));
            }
        }
        let bg = vec![
            (0, 0),
            (cx, 0),
            (last_x, 0),
            (0, cy),
            (last_x, cy),
            (0, last_y),
            (cx, last_y),
            (last_x, last_y),
        ];
        SeedSet::new(fg, bg)
    } else {
        let fg = vec![(cx, cy), (cx - 1, cy), (cx + 1, cy), (cx, cy - 1), (cx, cy + 1)];
        let bg = vec![(0, 0), (last_x, 0), (0, last_y), (last_x, last_y)];
        SeedSet::new(fg, bg)
    }
}

//! Quadtree split-and-merge seed detection feeding an incremental
//! multi-seeded region growing with an adaptive stopping rule.

use crate::error::{CoreError, Result};
use crate::imgcore::{
    connected_components, dilate, erode, inner_boundary, open, BinaryMask, Connectivity,
    GrayImage, StructuringElement,
};
use crate::threshold::{histogram, otsu};

/// Homogeneity predicate bounds for the split phase plus the minimum quad
/// size, on normalized `[0, 1]` intensities.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SplitMergeConfig {
    /// Quad accepted when `mean_lo < mean < mean_hi` (strict on both sides).
    pub mean_lo: f64,
    pub mean_hi: f64,
    /// Minimum quad side in pixels; no splitting below this.
    pub rho_min: u32,
}

impl Default for SplitMergeConfig {
    fn default() -> Self {
        Self { mean_lo: 0.0, mean_hi: 0.58, rho_min: 4 }
    }
}

impl SplitMergeConfig {
    fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.mean_lo)
            || !(0.0..=1.0).contains(&self.mean_hi)
            || self.mean_lo >= self.mean_hi
        {
            return Err(CoreError::InvalidParameter("split-merge mean bounds".into()));
        }
        if self.rho_min < 1 {
            return Err(CoreError::InvalidParameter("rho_min must be >= 1".into()));
        }
        Ok(())
    }
}

/// Seed-region cleanup tuning. The thesis describes the edge-intersection
/// control qualitatively; the bounds live here with documented defaults.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SeedCleanupConfig {
    /// Radius of the diamond opening applied to the split-merge output.
    pub opening_radius: u32,
    /// Half-width of the square element dilating the ROI edge.
    pub edge_dilate_radius: u32,
    /// A component is dropped when its overlap with the dilated ROI edge
    /// exceeds this fraction of the component area.
    pub max_edge_overlap: f64,
}

impl Default for SeedCleanupConfig {
    fn default() -> Self {
        Self { opening_radius: 1, edge_dilate_radius: 2, max_edge_overlap: 0.10 }
    }
}

/// Quadtree split over the image, padded conceptually to a power-of-two
/// square; quads fully outside the image are dropped and means are computed
/// over in-image pixels only. Accepted quads (predicate true) are unioned;
/// rejected quads split down to `rho_min`.
pub fn split_and_merge(img: &NormalizedImage, cfg: &SplitMergeConfig) -> Result<BinaryMask> {
    cfg.validate()?;
    let w = img.width;
    let h = img.height;
    let side = (w.max(h)).next_power_of_two();
    let mut mask = BinaryMask::zeros(w, h);
    split_quad(img, cfg, 0, 0, side, &mut mask);
    Ok(mask)
}

fn split_quad(img: &NormalizedImage, cfg: &SplitMergeConfig, x0: u32, y0: u32, side: u32, out: &mut BinaryMask) {
    if x0 >= img.width || y0 >= img.height {
        return; // fully in the padding
    }
    let x1 = (x0 + side).min(img.width);
    let y1 = (y0 + side).min(img.height);
    let mut sum = 0.0f64;
    let mut count = 0usize;
    for y in y0..y1 {
        for x in x0..x1 {
            sum += img.get(x, y);
            count += 1;
        }
    }
    let mean = sum / count as f64;
    if mean > cfg.mean_lo && mean < cfg.mean_hi {
        for y in y0..y1 {
            for x in x0..x1 {
                out.set(x, y, true);
            }
        }
        return;
    }
    if side <= cfg.rho_min {
        return;
    }
    let half = side / 2;
    split_quad(img, cfg, x0, y0, half, out);
    split_quad(img, cfg, x0 + half, y0, half, out);
    split_quad(img, cfg, x0, y0 + half, half, out);
    split_quad(img, cfg, x0 + half, y0 + half, half, out);
}

/// Remove split-and-merge artifacts near the ROI boundary: a diamond opening
/// breaks loose diagonal links, then components whose overlap with the
/// dilated ROI edge exceeds the area-scaled bound are dropped.
pub fn seed_cleanup(sm_mask: &BinaryMask, roi: &BinaryMask, cfg: &SeedCleanupConfig) -> Result<BinaryMask> {
    if sm_mask.width() != roi.width() || sm_mask.height() != roi.height() {
        return Err(CoreError::DimensionMismatch("mask vs roi".into()));
    }
    let opened = open(sm_mask, &StructuringElement::diamond(cfg.opening_radius));
    let edge = inner_boundary(roi);
    let fat_edge = dilate(&edge, &StructuringElement::square(cfg.edge_dilate_radius));
    let labels = connected_components(&opened, Connectivity::Eight);
    let mut out = BinaryMask::zeros(sm_mask.width(), sm_mask.height());
    for label in 1..=labels.count() {
        let comp = labels.mask_of(label);
        let overlap = comp.and(&fat_edge)?.area();
        if (overlap as f64) <= cfg.max_edge_overlap * comp.area() as f64 {
            out = out.or(&comp)?;
        }
    }
    Ok(out)
}

/// Image with intensities normalized to `[0, 1]` (ROI pixels mapped into
/// `(0, 1]` so zeroed background never satisfies a `mean > 0` predicate).
#[derive(Clone, Debug)]
pub struct NormalizedImage {
    pub width: u32,
    pub height: u32,
    values: Vec<f64>,
}

impl NormalizedImage {
    #[inline]
    pub fn get(&self, x: u32, y: u32) -> f64 {
        self.values[(y * self.width + x) as usize]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Normalize the ROI pixels of an image into `[eps, 1]` with `eps` one
    /// quantization step; pixels outside the ROI become exactly 0.
    pub fn from_roi(img: &GrayImage, roi: &BinaryMask) -> Result<(Self, GrayImage)> {
        if img.width() != roi.width() || img.height() != roi.height() {
            return Err(CoreError::DimensionMismatch("image vs roi".into()));
        }
        let stretched = crate::imgcore::contrast_stretch_masked(img, roi, 1, 255.min(img.max_value()))?;
        let quantized = GrayImage::new(
            img.width(),
            img.height(),
            8,
            stretched.data().iter().map(|&v| v.min(255)).collect(),
        )?;
        let values = quantized.data().iter().map(|&v| v as f64 / 255.0).collect();
        Ok((Self { width: img.width(), height: img.height(), values }, quantized))
    }
}

/// Multi-seeded region growing with the adaptive stopping rule
/// `|f - mean| < theta_opt - mean`, re-evaluated as the region mean updates.
///
/// Each seed component is eroded first, its edge pixels are subsampled one
/// in five, and their 8-neighborhoods seed a FIFO growth that starts from
/// the full component (incremental scheme). Growth is confined to `domain`
/// when given.
pub fn region_growing(
    img: &NormalizedImage,
    seeds: &BinaryMask,
    theta_opt: f64,
    domain: Option<&BinaryMask>,
) -> Result<BinaryMask> {
    if seeds.is_all_zero() {
        return Err(CoreError::EmptyMask("region growing needs seeds".into()));
    }
    let (w, h) = (seeds.width() as i32, seeds.height() as i32);
    let eroded = erode(seeds, &StructuringElement::diamond(1));
    // Erosion may empty a small component; fall back to the raw seeds then.
    let base = if eroded.is_all_zero() { seeds.clone() } else { eroded };
    let labels = connected_components(&base, Connectivity::Eight);
    let mut out = BinaryMask::zeros(seeds.width(), seeds.height());

    for label in 1..=labels.count() {
        let comp = labels.mask_of(label);
        let mut region = comp.clone();
        let mut count = comp.area() as f64;
        let mut sum = 0.0f64;
        for y in 0..h {
            for x in 0..w {
                if comp.get(x as u32, y as u32) {
                    sum += img.get(x as u32, y as u32);
                }
            }
        }

        // Edge pixels of the seed region, raster order, sampled 1-in-5.
        let edge = inner_boundary(&comp);
        let mut queue: std::collections::VecDeque<(i32, i32)> = std::collections::VecDeque::new();
        let mut queued = vec![false; (w * h) as usize];
        let mut edge_idx = 0usize;
        for y in 0..h {
            for x in 0..w {
                if edge.get(x as u32, y as u32) {
                    if edge_idx % 5 == 0 {
                        for dy in -1..=1 {
                            for dx in -1..=1 {
                                let nx = x + dx;
                                let ny = y + dy;
                                if nx < 0 || ny < 0 || nx >= w || ny >= h {
                                    continue;
                                }
                                let ni = (ny * w + nx) as usize;
                                if !region.get(nx as u32, ny as u32) && !queued[ni] {
                                    queued[ni] = true;
                                    queue.push_back((nx, ny));
                                }
                            }
                        }
                    }
                    edge_idx += 1;
                }
            }
        }

        while let Some((x, y)) = queue.pop_front() {
            if region.get(x as u32, y as u32) {
                continue;
            }
            if let Some(d) = domain {
                if !d.get(x as u32, y as u32) {
                    continue;
                }
            }
            let mean = sum / count;
            let theta_adapt = theta_opt - mean;
            if theta_adapt <= 0.0 {
                continue; // predicate unsatisfiable for this region state
            }
            let f = img.get(x as u32, y as u32);
            if (f - mean).abs() < theta_adapt {
                region.set(x as u32, y as u32, true);
                sum += f;
                count += 1.0;
                for dy in -1..=1 {
                    for dx in -1..=1 {
                        let nx = x + dx;
                        let ny = y + dy;
                        if nx < 0 || ny < 0 || nx >= w || ny >= h {
                            continue;
                        }
                        let ni = (ny * w + nx) as usize;
                        if !region.get(nx as u32, ny as u32) && !queued[ni] {
                            queued[ni] = true;
                            queue.push_back((nx, ny));
                        }
                    }
                }
            } else {
                // Re-testing later is allowed when the mean has drifted.
                queued[(y * w + x) as usize] = false;
            }
        }
        out = out.or(&region)?;
    }
    Ok(out)
}

/// Full fibroid pipeline: crop to the ROI bounding box (the masked input is
/// the minimum box enclosing the uterus), normalize, split-and-merge, seed
/// cleanup, Otsu threshold over the ROI histogram and incremental region
/// growing. Without the crop the zero background would dominate large quads
/// and drag mixed means into the acceptance band.
pub fn fibroid_pipeline(
    img: &GrayImage,
    uterus_roi: &BinaryMask,
    cfg: &SplitMergeConfig,
) -> Result<BinaryMask> {
    let (bx, by, bw, bh) = uterus_roi
        .bounding_box()
        .ok_or_else(|| CoreError::EmptyMask("uterus roi".into()))?;
    let img_c = img.crop(bx, by, bw, bh)?;
    let roi_c = uterus_roi.crop(bx, by, bw, bh)?;
    let (normalized, quantized) = NormalizedImage::from_roi(&img_c, &roi_c)?;
    let sm = split_and_merge(&normalized, cfg)?;
    let sm = sm.and(&roi_c)?;
    let seeds = seed_cleanup(&sm, &roi_c, &SeedCleanupConfig::default())?;
    if seeds.is_all_zero() {
        // No in-band seed region: legitimate empty result.
        return Ok(BinaryMask::zeros(img.width(), img.height()));
    }
    let hist = histogram(&quantized, Some(&roi_c))?;
    let theta = otsu(&hist)?.theta_opt / 255.0;
    let grown = region_growing(&normalized, &seeds, theta, Some(&roi_c))?;
    BinaryMask::uncrop(&grown, img.width(), img.height(), bx, by)
}

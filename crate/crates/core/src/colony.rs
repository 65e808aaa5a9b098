//! Clonogenic-assay plate analysis: circle-Hough well detection with a
//! sensitivity/skimming control strategy, white-masked colony extraction via
//! local adaptive thresholding, and ACC/SF evaluation.

use crate::error::{CoreError, Result};
use crate::imgcore::{fill_holes, BinaryMask, GrayImage};
use crate::threshold::{local_adaptive_threshold, Polarity};

/// 24-bit RGB raster.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ColorImage {
    width: u32,
    height: u32,
    data: Vec<[u8; 3]>,
}

impl ColorImage {
    pub fn new(width: u32, height: u32, data: Vec<[u8; 3]>) -> Result<Self> {
        if data.len() != (width as usize) * (height as usize) {
            return Err(CoreError::DimensionMismatch("rgb data length".into()));
        }
        Ok(Self { width, height, data })
    }

    pub fn filled(width: u32, height: u32, rgb: [u8; 3]) -> Self {
        Self { width, height, data: vec![rgb; (width as usize) * (height as usize)] }
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    #[inline]
    pub fn get(&self, x: u32, y: u32) -> [u8; 3] {
        self.data[(y * self.width + x) as usize]
    }

    #[inline]
    pub fn set(&mut self, x: u32, y: u32, rgb: [u8; 3]) {
        self.data[(y * self.width + x) as usize] = rgb;
    }

    pub fn data(&self) -> &[[u8; 3]] {
        &self.data
    }

    /// Rec. 601 luma as an 8-bit gray image.
    pub fn luma(&self) -> GrayImage {
        let data = self
            .data
            .iter()
            .map(|&[r, g, b]| {
                (0.299 * r as f64 + 0.587 * g as f64 + 0.114 * b as f64).round() as u16
            })
            .collect();
        GrayImage::new(self.width, self.height, 8, data).expect("same dims")
    }
}

/// A detected well: sub-pixel center, radius and accumulator strength.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WellCircle {
    pub center: (f64, f64),
    pub radius: f64,
    pub strength: f64,
}

/// sRGB (D65) to CIE L*u*v* conversion; returns the three component rasters.
pub fn rgb_to_luv(img: &ColorImage) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let n = img.data.len();
    let mut l_out = Vec::with_capacity(n);
    let mut u_out = Vec::with_capacity(n);
    let mut v_out = Vec::with_capacity(n);
    // D65 reference white.
    let (xn, yn, zn) = (0.95047, 1.0, 1.08883);
    let un_prime = 4.0 * xn / (xn + 15.0 * yn + 3.0 * zn);
    let vn_prime = 9.0 * yn / (xn + 15.0 * yn + 3.0 * zn);
    for &[r, g, b] in &img.data {
        let lin = |c: u8| {
            let c = c as f64 / 255.0;
            if c <= 0.04045 {
                c / 12.92
            } else {
                ((c + 0.055) / 1.055).powf(2.4)
            }
        };
        let (r, g, b) = (lin(r), lin(g), lin(b));
        let x = 0.4124564 * r + 0.3575761 * g + 0.1804375 * b;
        let y = 0.2126729 * r + 0.7151522 * g + 0.0721750 * b;
        let z = 0.0193339 * r + 0.1191920 * g + 0.9503041 * b;
        let yr = y / yn;
        let l = if yr > 0.008856 { 116.0 * yr.cbrt() - 16.0 } else { 903.3 * yr };
        let denom = x + 15.0 * y + 3.0 * z;
        let (u_prime, v_prime) = if denom > 0.0 {
            (4.0 * x / denom, 9.0 * y / denom)
        } else {
            (un_prime, vn_prime)
        };
        l_out.push(l);
        u_out.push(13.0 * l * (u_prime - un_prime));
        v_out.push(13.0 * l * (v_prime - vn_prime));
    }
    (l_out, u_out, v_out)
}

/// Initial accumulator-peak acceptance sensitivity and its escalated value.
pub const SENSITIVITY_DEFAULT: f64 = 0.98;
pub const SENSITIVITY_ESCALATED: f64 = 0.99;

/// Fixed-radius circle Hough transform: Sobel edgels vote along circles of
/// radius `r_w`; accumulator peaks above `(1 - sensitivity) * ideal votes`
/// become candidates (non-maximum suppression within one radius).
fn cht_candidates(gray: &GrayImage, r_w: f64, sensitivity: f64) -> Vec<WellCircle> {
    let (w, h) = (gray.width() as i32, gray.height() as i32);
    // Sobel gradient magnitude.
    let at = |x: i32, y: i32| gray.get(x.clamp(0, w - 1) as u32, y.clamp(0, h - 1) as u32) as f64;
    let mut mags = vec![0.0f64; gray.len()];
    for y in 0..h {
        for x in 0..w {
            let gx = (at(x + 1, y - 1) + 2.0 * at(x + 1, y) + at(x + 1, y + 1))
                - (at(x - 1, y - 1) + 2.0 * at(x - 1, y) + at(x - 1, y + 1));
            let gy = (at(x - 1, y + 1) + 2.0 * at(x, y + 1) + at(x + 1, y + 1))
                - (at(x - 1, y - 1) + 2.0 * at(x, y - 1) + at(x + 1, y - 1));
            mags[(y * w + x) as usize] = (gx * gx + gy * gy).sqrt();
        }
    }
    // Adaptive edge threshold: Otsu over the quantized magnitudes.
    let max_mag = mags.iter().cloned().fold(0.0f64, f64::max);
    if max_mag == 0.0 {
        return Vec::new();
    }
    let quantized = GrayImage::new(
        gray.width(),
        gray.height(),
        8,
        mags.iter().map(|&m| (m / max_mag * 255.0).round() as u16).collect(),
    )
    .expect("same dims");
    let hist = crate::threshold::histogram(&quantized, None).expect("non-empty");
    let edge_theta = match crate::threshold::otsu(&hist) {
        Ok(r) => r.theta_opt / 255.0 * max_mag,
        Err(_) => return Vec::new(),
    };

    // Vote along the rasterized circle around each edgel.
    let circle = circle_offsets(r_w);
    let ideal = circle.len() as f64;
    let mut acc = vec![0.0f64; gray.len()];
    for y in 0..h {
        for x in 0..w {
            if mags[(y * w + x) as usize] <= edge_theta {
                continue;
            }
            for &(dx, dy) in &circle {
                let cx = x + dx;
                let cy = y + dy;
                if cx >= 0 && cy >= 0 && cx < w && cy < h {
                    acc[(cy * w + cx) as usize] += 1.0;
                }
            }
        }
    }

    // Candidate peaks above the sensitivity-scaled threshold.
    let vote_min = (1.0 - sensitivity) * ideal;
    let mut peaks: Vec<(f64, i32, i32)> = Vec::new();
    for y in 0..h {
        for x in 0..w {
            let v = acc[(y * w + x) as usize];
            if v > vote_min {
                peaks.push((v, x, y));
            }
        }
    }
    peaks.sort_by(|a, b| b.0.partial_cmp(&a.0).expect("finite votes").then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    // Non-maximum suppression within one radius.
    let mut kept: Vec<WellCircle> = Vec::new();
    for (v, x, y) in peaks {
        let too_close = kept.iter().any(|c| {
            let dx = c.center.0 - x as f64;
            let dy = c.center.1 - y as f64;
            dx * dx + dy * dy < r_w * r_w
        });
        if too_close {
            continue;
        }
        // Sub-pixel refinement: vote-weighted centroid over the 3x3 block.
        let mut sx = 0.0;
        let mut sy = 0.0;
        let mut sw = 0.0;
        for dy in -1..=1i32 {
            for dx in -1..=1i32 {
                let nx = x + dx;
                let ny = y + dy;
                if nx >= 0 && ny >= 0 && nx < w && ny < h {
                    let wgt = acc[(ny * w + nx) as usize];
                    sx += wgt * nx as f64;
                    sy += wgt * ny as f64;
                    sw += wgt;
                }
            }
        }
        kept.push(WellCircle {
            center: (sx / sw, sy / sw),
            radius: r_w,
            strength: v / ideal,
        });
    }
    kept
}

fn circle_offsets(r: f64) -> Vec<(i32, i32)> {
    let mut pts = std::collections::BTreeSet::new();
    let steps = (2.0 * std::f64::consts::PI * r).ceil() as usize * 2;
    for i in 0..steps {
        let a = i as f64 / steps as f64 * 2.0 * std::f64::consts::PI;
        pts.insert(((r * a.cos()).round() as i32, (r * a.sin()).round() as i32));
    }
    pts.into_iter().collect()
}

/// Detect exactly `n_wells` wells of known radius `r_w`.
///
/// If the first pass finds fewer candidates the sensitivity escalates from
/// 0.98 to 0.99; if it finds more, only the strongest `n_wells` survive the
/// skimming step. Still finding fewer is a detection failure.
pub fn detect_wells(img: &ColorImage, r_w: f64, n_wells: usize) -> Result<Vec<WellCircle>> {
    if n_wells == 0 {
        return Err(CoreError::InvalidParameter("n_wells must be >= 1".into()));
    }
    if r_w <= 0.0 {
        return Err(CoreError::InvalidParameter("well radius must be positive".into()));
    }
    let gray = img.luma();
    let mut candidates = cht_candidates(&gray, r_w, SENSITIVITY_DEFAULT);
    if candidates.len() < n_wells {
        candidates = cht_candidates(&gray, r_w, SENSITIVITY_ESCALATED);
    }
    if candidates.len() < n_wells {
        return Err(CoreError::DetectionFailure { expected: n_wells, found: candidates.len() });
    }
    // Skimming: keep the strongest n (candidates are strength-sorted).
    candidates.truncate(n_wells);
    Ok(candidates)
}

/// Order wells row-major: rows are clustered along y with tolerance `r/2`,
/// then each row is sorted by x.
pub fn order_wells(wells: &[WellCircle]) -> Vec<WellCircle> {
    if wells.is_empty() {
        return Vec::new();
    }
    let tol = wells[0].radius / 2.0;
    let mut sorted: Vec<WellCircle> = wells.to_vec();
    sorted.sort_by(|a, b| a.center.1.partial_cmp(&b.center.1).expect("finite"));
    let mut rows: Vec<Vec<WellCircle>> = Vec::new();
    for wc in sorted {
        match rows.last_mut() {
            Some(row) => {
                let row_y = row.iter().map(|c| c.center.1).sum::<f64>() / row.len() as f64;
                if (wc.center.1 - row_y).abs() <= tol {
                    row.push(wc);
                } else {
                    rows.push(vec![wc]);
                }
            }
            None => rows.push(vec![wc]),
        }
    }
    let mut out = Vec::with_capacity(wells.len());
    for mut row in rows {
        row.sort_by(|a, b| a.center.0.partial_cmp(&b.center.0).expect("finite"));
        out.append(&mut row);
    }
    out
}

/// Chromatic channel carrying the stain.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum StainChannel {
    /// u* axis; crystal violet pushes u* positive, so the working image is
    /// inverted to make colonies dark.
    #[default]
    UStar,
    /// v* axis; the stain pushes v* negative, already dark after scaling.
    VStar,
}

/// Extract the colony mask of one well.
///
/// The well's bounding square is cropped; the working image is the stain
/// channel scaled to 8 bits with colonies dark; pixels outside the circle
/// are forced to white (maximum) before the local adaptive threshold, which
/// rescues colonies hugging the rim. The only post-processing is hole
/// filling.
pub fn extract_colonies(plate: &ColorImage, well: &WellCircle, channel: StainChannel) -> Result<BinaryMask> {
    let (crop, x0, y0, cw, ch) = crop_well(plate, well)?;
    let working = stain_working_image(&crop, channel);
    let masked = white_mask_outside(&working, well, x0, y0);
    let below = local_adaptive_threshold(&masked, Polarity::Below);
    // Only pixels inside the circle count.
    let mut inside = BinaryMask::zeros(cw, ch);
    for y in 0..ch {
        for x in 0..cw {
            let dx = (x0 + x) as f64 - well.center.0;
            let dy = (y0 + y) as f64 - well.center.1;
            if dx * dx + dy * dy <= well.radius * well.radius {
                inside.set(x, y, true);
            }
        }
    }
    let mask = below.and(&inside)?;
    let filled = fill_holes(&mask).and(&inside)?;
    BinaryMask::uncrop(&filled, plate.width(), plate.height(), x0, y0)
}

/// Black-mask variant used for comparison: pixels outside the circle go to 0.
pub fn extract_colonies_black_mask(
    plate: &ColorImage,
    well: &WellCircle,
    channel: StainChannel,
) -> Result<BinaryMask> {
    let (crop, x0, y0, cw, ch) = crop_well(plate, well)?;
    let working = stain_working_image(&crop, channel);
    let mut masked = working.clone();
    for y in 0..ch {
        for x in 0..cw {
            let dx = (x0 + x) as f64 - well.center.0;
            let dy = (y0 + y) as f64 - well.center.1;
            if dx * dx + dy * dy > well.radius * well.radius {
                masked.set(x, y, 0);
            }
        }
    }
    let below = local_adaptive_threshold(&masked, Polarity::Below);
    let mut inside = BinaryMask::zeros(cw, ch);
    for y in 0..ch {
        for x in 0..cw {
            let dx = (x0 + x) as f64 - well.center.0;
            let dy = (y0 + y) as f64 - well.center.1;
            if dx * dx + dy * dy <= well.radius * well.radius {
                inside.set(x, y, true);
            }
        }
    }
    let mask = below.and(&inside)?;
    let filled = fill_holes(&mask).and(&inside)?;
    BinaryMask::uncrop(&filled, plate.width(), plate.height(), x0, y0)
}

fn crop_well(plate: &ColorImage, well: &WellCircle) -> Result<(ColorImage, u32, u32, u32, u32)> {
    let r = well.radius.ceil() as i64 + 1;
    let x0 = ((well.center.0.round() as i64) - r).max(0) as u32;
    let y0 = ((well.center.1.round() as i64) - r).max(0) as u32;
    let x1 = (((well.center.0.round() as i64) + r) as u32).min(plate.width - 1);
    let y1 = (((well.center.1.round() as i64) + r) as u32).min(plate.height - 1);
    if x1 <= x0 || y1 <= y0 {
        return Err(CoreError::InvalidParameter("well outside the plate".into()));
    }
    let (cw, ch) = (x1 - x0 + 1, y1 - y0 + 1);
    let mut data = Vec::with_capacity((cw as usize) * (ch as usize));
    for y in y0..=y1 {
        for x in x0..=x1 {
            data.push(plate.get(x, y));
        }
    }
    Ok((ColorImage::new(cw, ch, data)?, x0, y0, cw, ch))
}

/// 8-bit working image from the stain channel, scaled so achromatic pixels
/// (white mask, unstained well) sit at the maximum and the stain is dark.
///
/// Crystal violet pushes u* strongly positive and v* negative; only the
/// stain-sign half-axis is mapped, so any achromatic or off-axis tint stays
/// at full white.
fn stain_working_image(crop: &ColorImage, channel: StainChannel) -> GrayImage {
    let (_, u, v) = rgb_to_luv(crop);
    let vals = match channel {
        StainChannel::UStar => u,
        StainChannel::VStar => v,
    };
    let data = vals
        .iter()
        .map(|&x| {
            let t = match channel {
                StainChannel::UStar => 1.0 - x.max(0.0) / 200.0,
                StainChannel::VStar => 1.0 + x.min(0.0) / 200.0,
            };
            (t.clamp(0.0, 1.0) * 255.0).round() as u16
        })
        .collect();
    GrayImage::new(crop.width, crop.height, 8, data).expect("same dims")
}

fn white_mask_outside(working: &GrayImage, well: &WellCircle, x0: u32, y0: u32) -> GrayImage {
    let mut out = working.clone();
    for y in 0..working.height() {
        for x in 0..working.width() {
            let dx = (x0 + x) as f64 - well.center.0;
            let dy = (y0 + y) as f64 - well.center.1;
            if dx * dx + dy * dy > well.radius * well.radius {
                out.set(x, y, out.max_value());
            }
        }
    }
    out
}

/// Percentage of the well circle covered by the colony mask.
pub fn acc(mask: &BinaryMask, well: &WellCircle) -> Result<f64> {
    let mut inside = 0usize;
    let mut covered = 0usize;
    for y in 0..mask.height() {
        for x in 0..mask.width() {
            let dx = x as f64 - well.center.0;
            let dy = y as f64 - well.center.1;
            if dx * dx + dy * dy <= well.radius * well.radius {
                inside += 1;
                if mask.get(x, y) {
                    covered += 1;
                }
            }
        }
    }
    if inside == 0 {
        return Err(CoreError::InvalidParameter("well circle has zero area".into()));
    }
    Ok(100.0 * covered as f64 / inside as f64)
}

/// Area-based surviving fraction: `100 * ACC_treated / ACC_untreated`.
pub fn surviving_fraction(acc_treated: f64, acc_untreated: f64) -> Result<f64> {
    if acc_untreated <= 0.0 {
        return Err(CoreError::InvalidParameter("control ACC must be positive".into()));
    }
    Ok(100.0 * acc_treated / acc_untreated)
}

/// Colony-count SF conventions.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SfConvention {
    /// SF = (colonies_treated / plated_treated) * PE, as printed in the
    /// source material.
    AsPublished,
    /// Standard protocol: SF = colonies_treated / (plated_treated * PE/100)
    /// * 100.
    Standard,
}

/// Conventional count-based plating efficiency and surviving fraction.
pub fn conventional_sf(
    colonies_treated: u64,
    plated_treated: u64,
    colonies_control: u64,
    plated_control: u64,
    convention: SfConvention,
) -> Result<(f64, f64)> {
    if plated_treated == 0 || plated_control == 0 {
        return Err(CoreError::InvalidParameter("plated counts must be positive".into()));
    }
    if colonies_control == 0 {
        return Err(CoreError::InvalidParameter("control colonies must be positive".into()));
    }
    let pe = colonies_control as f64 / plated_control as f64 * 100.0;
    let sf = match convention {
        SfConvention::AsPublished => colonies_treated as f64 / plated_treated as f64 * pe,
        SfConvention::Standard => {
            colonies_treated as f64 / (plated_treated as f64 * pe / 100.0) * 100.0
        }
    };
    Ok((pe, sf))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::phantom::{plate_phantom, PlatePhantomConfig};
    use approx::assert_relative_eq;

    #[test]
    fn luv_gray_pixels_are_achromatic() {
        let img = ColorImage::filled(2, 2, [128, 128, 128]);
        let (_, u, v) = rgb_to_luv(&img);
        for i in 0..4 {
            assert!(u[i].abs() < 0.5, "u* {}", u[i]);
            assert!(v[i].abs() < 0.5, "v* {}", v[i]);
        }
    }

    #[test]
    fn luv_black_is_zero_lightness() {
        let img = ColorImage::filled(1, 1, [0, 0, 0]);
        let (l, _, _) = rgb_to_luv(&img);
        assert_relative_eq!(l[0], 0.0);
    }

    #[test]
    fn luv_reference_swatch_matches_published_values() {
        // sRGB primary red (255, 0, 0): published CIE L*u*v* (D65, 2 deg)
        // values are approximately L* = 53.24, u* = 175.05, v* = 37.75.
        let img = ColorImage::filled(1, 1, [255, 0, 0]);
        let (l, u, v) = rgb_to_luv(&img);
        assert!((l[0] - 53.24).abs() < 0.5, "L* {}", l[0]);
        assert!((u[0] - 175.05).abs() < 0.5, "u* {}", u[0]);
        assert!((v[0] - 37.75).abs() < 0.5, "v* {}", v[0]);
    }

    #[test]
    fn detects_six_clean_wells() {
        let cfg = PlatePhantomConfig { rows: 2, cols: 3, well_radius: 24.0, ..Default::default() };
        let p = plate_phantom(&cfg, 1).unwrap();
        let wells = detect_wells(&p.image, cfg.well_radius, 6).unwrap();
        assert_eq!(wells.len(), 6);
        for truth in &p.well_centers {
            let best = wells
                .iter()
                .map(|w| {
                    ((w.center.0 - truth.0).powi(2) + (w.center.1 - truth.1).powi(2)).sqrt()
                })
                .fold(f64::INFINITY, f64::min);
            assert!(best <= 2.0, "center error {best}");
        }
    }

    #[test]
    fn ordering_is_row_major() {
        let mk = |x: f64, y: f64| WellCircle { center: (x, y), radius: 20.0, strength: 1.0 };
        let wells = vec![mk(200.0, 22.0), mk(80.0, 18.0), mk(140.0, 98.0), mk(20.0, 102.0)];
        let ordered = order_wells(&wells);
        assert_relative_eq!(ordered[0].center.0, 80.0);
        assert_relative_eq!(ordered[1].center.0, 200.0);
        assert_relative_eq!(ordered[2].center.0, 20.0);
        assert_relative_eq!(ordered[3].center.0, 140.0);
        // Jitter within r/4 keeps the ordering.
        let jittered = vec![mk(200.0, 24.5), mk(80.0, 15.5), mk(140.0, 95.5), mk(20.0, 104.5)];
        let ordered2 = order_wells(&jittered);
        for (a, b) in ordered.iter().zip(&ordered2) {
            assert_relative_eq!(a.center.0, b.center.0);
        }
        // Single well.
        assert_eq!(order_wells(&[mk(5.0, 5.0)]).len(), 1);
    }

    #[test]
    fn empty_well_yields_empty_mask() {
        let cfg = PlatePhantomConfig { rows: 1, cols: 1, well_radius: 30.0, ..Default::default() };
        let p = plate_phantom(&cfg, 3).unwrap();
        let well = WellCircle { center: p.well_centers[0], radius: cfg.well_radius, strength: 1.0 };
        let mask = extract_colonies(&p.image, &well, StainChannel::UStar).unwrap();
        assert_eq!(mask.area(), 0);
    }

    #[test]
    fn acc_bounds_and_monotonicity() {
        let well = WellCircle { center: (20.0, 20.0), radius: 10.0, strength: 1.0 };
        let empty = BinaryMask::zeros(41, 41);
        assert_relative_eq!(acc(&empty, &well).unwrap(), 0.0);
        let full = BinaryMask::filled(41, 41);
        assert_relative_eq!(acc(&full, &well).unwrap(), 100.0);
        // Adding pixels never decreases ACC.
        let mut some = BinaryMask::zeros(41, 41);
        some.set(20, 20, true);
        let a1 = acc(&some, &well).unwrap();
        some.set(21, 20, true);
        let a2 = acc(&some, &well).unwrap();
        assert!(a2 >= a1);
    }

    #[test]
    fn sf_identities() {
        assert_relative_eq!(surviving_fraction(37.5, 37.5).unwrap(), 100.0);
        assert_relative_eq!(surviving_fraction(25.0, 50.0).unwrap(), 50.0);
        assert!(surviving_fraction(10.0, 0.0).is_err());
    }

    #[test]
    fn conventional_sf_values() {
        let (pe, _) = conventional_sf(10, 100, 50, 100, SfConvention::AsPublished).unwrap();
        assert_relative_eq!(pe, 50.0);
        // Unit treated ratio: the published formula reduces to SF = PE.
        let (pe1, sf1) = conventional_sf(100, 100, 50, 100, SfConvention::AsPublished).unwrap();
        assert_relative_eq!(sf1, pe1);
        // General published formula: SF = (ct/pt) * PE.
        let (pe2, sf2) = conventional_sf(50, 100, 50, 100, SfConvention::AsPublished).unwrap();
        assert_relative_eq!(sf2, pe2 * 0.5);
        let (_, sf0) = conventional_sf(0, 100, 50, 100, SfConvention::AsPublished).unwrap();
        assert_relative_eq!(sf0, 0.0);
        // Standard protocol: identical treated/control ratios give SF = 100.
        let (_, sf_std) = conventional_sf(50, 100, 50, 100, SfConvention::Standard).unwrap();
        assert_relative_eq!(sf_std, 100.0);
        assert!(conventional_sf(1, 0, 1, 1, SfConvention::Standard).is_err());
        assert!(conventional_sf(1, 1, 0, 1, SfConvention::Standard).is_err());
    }
}

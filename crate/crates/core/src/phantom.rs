//! Deterministic synthetic images with ground truth, used by the batch CLI
//! and the validation suites.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::colony::ColorImage;
use crate::error::{CoreError, Result};
use crate::imgcore::{BinaryMask, GrayImage};
use crate::register::{apply_transform, AffineTransform2D, Interp};

fn gaussian(rng: &mut ChaCha8Rng) -> f64 {
    let u1: f64 = rng.gen_range(1e-12..1.0);
    let u2: f64 = rng.gen_range(0.0..1.0);
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

/// Bright pseudo-spherical blob, optionally with a dark core, on a dark
/// background with mild Gaussian noise.
#[derive(Clone, Copy, Debug)]
pub struct BlobPhantomConfig {
    pub radius: f64,
    /// Vertical-to-horizontal axis ratio (1.0 = circle).
    pub aspect: f64,
    pub core_radius: Option<f64>,
    pub bg_level: f64,
    pub fg_level: f64,
    pub core_level: f64,
    pub noise_sd: f64,
}

impl Default for BlobPhantomConfig {
    fn default() -> Self {
        Self {
            radius: 12.0,
            aspect: 1.0,
            core_radius: None,
            bg_level: 30.0,
            fg_level: 210.0,
            core_level: 45.0,
            noise_sd: 4.0,
        }
    }
}

pub struct BlobPhantom {
    pub image: GrayImage,
    pub truth: BinaryMask,
}

pub fn blob_phantom(width: u32, height: u32, cfg: &BlobPhantomConfig, seed: u64) -> Result<BlobPhantom> {
    if cfg.radius < 2.0 || cfg.aspect <= 0.0 {
        return Err(CoreError::InvalidParameter("blob radius/aspect".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cx = (width as f64 - 1.0) / 2.0;
    let cy = (height as f64 - 1.0) / 2.0;
    let mut image = GrayImage::zeros(width, height, 8);
    let mut truth = BinaryMask::zeros(width, height);
    for y in 0..height {
        for x in 0..width {
            let dx = (x as f64 - cx) / cfg.radius;
            let dy = (y as f64 - cy) / (cfg.radius * cfg.aspect);
            let r2 = dx * dx + dy * dy;
            let inside = r2 <= 1.0;
            let in_core = cfg
                .core_radius
                .map(|cr| {
                    let s = cr / cfg.radius;
                    r2 <= s * s
                })
                .unwrap_or(false);
            if inside {
                truth.set(x, y, true);
            }
            let base = if in_core {
                cfg.core_level
            } else if inside {
                cfg.fg_level
            } else {
                cfg.bg_level
            };
            let v = base + cfg.noise_sd * gaussian(&mut rng);
            image.set(x, y, v.round().clamp(0.0, 255.0) as u16);
        }
    }
    Ok(BlobPhantom { image, truth })
}

/// Two-class image with known pixel labels: class A on the background, class
/// B inside a central disk, intensities drawn from two Gaussians.
pub struct MixturePhantom {
    pub image: GrayImage,
    /// Foreground (class B) truth.
    pub class_mask: BinaryMask,
}

#[derive(Clone, Copy, Debug)]
pub struct MixturePhantomConfig {
    pub mean_a: f64,
    pub sd_a: f64,
    pub mean_b: f64,
    pub sd_b: f64,
    pub disk_radius_fraction: f64,
}

impl Default for MixturePhantomConfig {
    fn default() -> Self {
        Self { mean_a: 95.0, sd_a: 16.0, mean_b: 165.0, sd_b: 20.0, disk_radius_fraction: 0.35 }
    }
}

pub fn mixture_phantom(
    width: u32,
    height: u32,
    cfg: &MixturePhantomConfig,
    seed: u64,
) -> Result<MixturePhantom> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cx = (width as f64 - 1.0) / 2.0;
    let cy = (height as f64 - 1.0) / 2.0;
    let r = cfg.disk_radius_fraction * width.min(height) as f64;
    let mut image = GrayImage::zeros(width, height, 8);
    let mut class_mask = BinaryMask::zeros(width, height);
    for y in 0..height {
        for x in 0..width {
            let inside =
                (x as f64 - cx).powi(2) + (y as f64 - cy).powi(2) <= r * r;
            let (mean, sd) = if inside { (cfg.mean_b, cfg.sd_b) } else { (cfg.mean_a, cfg.sd_a) };
            if inside {
                class_mask.set(x, y, true);
            }
            let v = mean + sd * gaussian(&mut rng);
            image.set(x, y, v.round().clamp(1.0, 255.0) as u16);
        }
    }
    Ok(MixturePhantom { image, class_mask })
}

/// Non-overlapping fluorescent nuclei on a dark field.
#[derive(Clone, Copy, Debug)]
pub struct NucleiPhantomConfig {
    pub count: usize,
    pub radius_min: u32,
    pub radius_max: u32,
    pub bg_level: f64,
    pub fg_level: f64,
    pub noise_sd: f64,
    /// Minimum gap between disk rims, in pixels.
    pub gap: f64,
}

impl Default for NucleiPhantomConfig {
    fn default() -> Self {
        Self { count: 50, radius_min: 5, radius_max: 15, bg_level: 12.0, fg_level: 200.0, noise_sd: 3.0, gap: 4.0 }
    }
}

pub struct NucleiPhantom {
    pub image: GrayImage,
    pub truth: crate::imgcore::LabelMap,
    pub centers: Vec<(f64, f64, f64)>,
}

pub fn nuclei_phantom(
    width: u32,
    height: u32,
    cfg: &NucleiPhantomConfig,
    seed: u64,
) -> Result<NucleiPhantom> {
    if cfg.radius_min < 2 || cfg.radius_max < cfg.radius_min {
        return Err(CoreError::InvalidParameter("nuclei radii".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut centers: Vec<(f64, f64, f64)> = Vec::with_capacity(cfg.count);
    let margin = cfg.radius_max as f64 + 2.0;
    let mut attempts = 0usize;
    while centers.len() < cfg.count {
        attempts += 1;
        if attempts > 200 * cfg.count + 1000 {
            return Err(CoreError::InvalidParameter(format!(
                "cannot place {} non-overlapping nuclei on {width}x{height}",
                cfg.count
            )));
        }
        let r = rng.gen_range(cfg.radius_min..=cfg.radius_max) as f64;
        let x = rng.gen_range(margin..(width as f64 - margin));
        let y = rng.gen_range(margin..(height as f64 - margin));
        let ok = centers.iter().all(|&(px, py, pr)| {
            let d = ((px - x).powi(2) + (py - y).powi(2)).sqrt();
            d >= pr + r + cfg.gap
        });
        if ok {
            centers.push((x, y, r));
        }
    }
    let mut image = GrayImage::zeros(width, height, 8);
    let mut truth = crate::imgcore::LabelMap::zeros(width, height);
    for y in 0..height {
        for x in 0..width {
            let mut level = cfg.bg_level;
            for (i, &(px, py, pr)) in centers.iter().enumerate() {
                if (x as f64 - px).powi(2) + (y as f64 - py).powi(2) <= pr * pr {
                    level = cfg.fg_level;
                    truth.set(x, y, i as u32 + 1);
                    break;
                }
            }
            let v = level + cfg.noise_sd * gaussian(&mut rng);
            image.set(x, y, v.round().clamp(0.0, 255.0) as u16);
        }
    }
    truth.set_count(centers.len() as u32);
    Ok(NucleiPhantom { image, truth, centers })
}

/// A single overlapping pair of nuclei with center distance
/// `2r - overlap_fraction * r`.
pub fn nuclei_pair_phantom(
    width: u32,
    height: u32,
    radius: u32,
    overlap_fraction: f64,
    seed: u64,
) -> Result<NucleiPhantom> {
    if !(0.0..=0.5).contains(&overlap_fraction) {
        return Err(CoreError::InvalidParameter("overlap fraction".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let r = radius as f64;
    let d = 2.0 * r - overlap_fraction * r;
    let angle: f64 = rng.gen_range(0.0..std::f64::consts::PI);
    let cx = width as f64 / 2.0;
    let cy = height as f64 / 2.0;
    let (dx, dy) = (d / 2.0 * angle.cos(), d / 2.0 * angle.sin());
    let centers = vec![(cx - dx, cy - dy, r), (cx + dx, cy + dy, r)];
    let mut image = GrayImage::zeros(width, height, 8);
    let mut truth = crate::imgcore::LabelMap::zeros(width, height);
    for y in 0..height {
        for x in 0..width {
            let mut level = 10.0;
            // Nearest-center labeling inside the union.
            let mut best = None;
            for (i, &(px, py, pr)) in centers.iter().enumerate() {
                let d2 = (x as f64 - px).powi(2) + (y as f64 - py).powi(2);
                if d2 <= pr * pr {
                    level = 205.0;
                    if best.map(|(_, bd)| d2 < bd).unwrap_or(true) {
                        best = Some((i, d2));
                    }
                }
            }
            if let Some((i, _)) = best {
                truth.set(x, y, i as u32 + 1);
            }
            let v = level + 3.0 * gaussian(&mut rng);
            image.set(x, y, v.round().clamp(0.0, 255.0) as u16);
        }
    }
    truth.set_count(2);
    Ok(NucleiPhantom { image, truth, centers })
}

/// Colony pattern inside one well.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ColonyPattern {
    None,
    /// `count` stained disks of the given radius scattered in the well.
    Disks { count: u32, radius: f64 },
    /// Stain covering the half of the well below its horizontal diameter.
    HalfPlane,
    /// Stained annulus hugging the rim.
    RimAnnulus { width: f64 },
}

/// Multi-well plate phantom.
#[derive(Clone, Debug)]
pub struct PlatePhantomConfig {
    pub rows: u32,
    pub cols: u32,
    pub well_radius: f64,
    /// Center-to-center pitch; defaults to 2.6 radii when zero.
    pub pitch: f64,
    /// Whole-plate rotation (degrees) about the plate center.
    pub rotation_deg: f64,
    /// Whole-plate translation in pixels.
    pub offset: (f64, f64),
    /// Per-well colony patterns, row-major; missing entries mean none.
    pub colonies: Vec<ColonyPattern>,
}

impl Default for PlatePhantomConfig {
    fn default() -> Self {
        Self {
            rows: 2,
            cols: 3,
            well_radius: 24.0,
            pitch: 0.0,
            rotation_deg: 0.0,
            offset: (0.0, 0.0),
            colonies: Vec::new(),
        }
    }
}

pub struct PlatePhantom {
    pub image: ColorImage,
    /// True well centers, row-major.
    pub well_centers: Vec<(f64, f64)>,
}

const PLATE_RGB: [u8; 3] = [235, 232, 228];
const WELL_RGB: [u8; 3] = [210, 214, 222];
const RING_RGB: [u8; 3] = [70, 72, 80];
const STAIN_RGB: [u8; 3] = [140, 30, 120];

pub fn plate_phantom(cfg: &PlatePhantomConfig, seed: u64) -> Result<PlatePhantom> {
    if cfg.rows == 0 || cfg.cols == 0 || cfg.well_radius < 6.0 {
        return Err(CoreError::InvalidParameter("plate layout".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let r = cfg.well_radius;
    let pitch = if cfg.pitch > 0.0 { cfg.pitch } else { 2.6 * r };
    let margin = 1.8 * r;
    let width = (2.0 * margin + (cfg.cols - 1) as f64 * pitch).ceil() as u32 + 1;
    let height = (2.0 * margin + (cfg.rows - 1) as f64 * pitch).ceil() as u32 + 1;
    let (pcx, pcy) = (width as f64 / 2.0, height as f64 / 2.0);
    let rot = cfg.rotation_deg.to_radians();
    let (sin, cos) = rot.sin_cos();

    let mut centers = Vec::new();
    for row in 0..cfg.rows {
        for col in 0..cfg.cols {
            let x0 = margin + col as f64 * pitch - pcx;
            let y0 = margin + row as f64 * pitch - pcy;
            let x = pcx + cos * x0 - sin * y0 + cfg.offset.0;
            let y = pcy + sin * x0 + cos * y0 + cfg.offset.1;
            centers.push((x, y));
        }
    }

    let mut image = ColorImage::filled(width, height, PLATE_RGB);
    // Wells: pale interior with a dark ring of ~2 px at the radius.
    for &(cx, cy) in &centers {
        let r_out = r + 1.2;
        let x0 = (cx - r_out - 2.0).floor().max(0.0) as u32;
        let y0 = (cy - r_out - 2.0).floor().max(0.0) as u32;
        let x1 = ((cx + r_out + 2.0).ceil() as u32).min(width - 1);
        let y1 = ((cy + r_out + 2.0).ceil() as u32).min(height - 1);
        for y in y0..=y1 {
            for x in x0..=x1 {
                let d = ((x as f64 - cx).powi(2) + (y as f64 - cy).powi(2)).sqrt();
                if d <= r - 1.2 {
                    image.set(x, y, WELL_RGB);
                } else if d <= r + 1.2 {
                    image.set(x, y, RING_RGB);
                }
            }
        }
    }

    // Colonies.
    for (i, &(cx, cy)) in centers.iter().enumerate() {
        let pattern = cfg.colonies.get(i).copied().unwrap_or(ColonyPattern::None);
        match pattern {
            ColonyPattern::None => {}
            ColonyPattern::Disks { count, radius } => {
                let mut placed: Vec<(f64, f64)> = Vec::new();
                let mut attempts = 0;
                while placed.len() < count as usize && attempts < 10_000 {
                    attempts += 1;
                    let a: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
                    let rr: f64 = rng.gen_range(0.0..(r - radius - 3.0).max(1.0));
                    let px = cx + rr * a.cos();
                    let py = cy + rr * a.sin();
                    if placed
                        .iter()
                        .all(|&(qx, qy)| ((qx - px).powi(2) + (qy - py).powi(2)).sqrt() > 2.0 * radius + 2.0)
                    {
                        placed.push((px, py));
                    }
                }
                for &(px, py) in &placed {
                    stamp_disk(&mut image, px, py, radius, STAIN_RGB);
                }
            }
            ColonyPattern::HalfPlane => {
                fill_where(&mut image, cx, cy, r - 1.3, |x, y| {
                    let _ = x;
                    y as f64 >= cy
                });
            }
            ColonyPattern::RimAnnulus { width: wdt } => {
                fill_where(&mut image, cx, cy, r - 1.3, |x, y| {
                    let d = ((x as f64 - cx).powi(2) + (y as f64 - cy).powi(2)).sqrt();
                    d >= r - 1.3 - wdt
                });
            }
        }
    }
    Ok(PlatePhantom { image, well_centers: centers })
}

fn stamp_disk(image: &mut ColorImage, cx: f64, cy: f64, radius: f64, rgb: [u8; 3]) {
    let x0 = (cx - radius).floor().max(0.0) as u32;
    let y0 = (cy - radius).floor().max(0.0) as u32;
    let x1 = ((cx + radius).ceil() as u32).min(image.width() - 1);
    let y1 = ((cy + radius).ceil() as u32).min(image.height() - 1);
    for y in y0..=y1 {
        for x in x0..=x1 {
            if (x as f64 - cx).powi(2) + (y as f64 - cy).powi(2) <= radius * radius {
                image.set(x, y, rgb);
            }
        }
    }
}

fn fill_where(image: &mut ColorImage, cx: f64, cy: f64, rmax: f64, pred: impl Fn(u32, u32) -> bool) {
    let x0 = (cx - rmax).floor().max(0.0) as u32;
    let y0 = (cy - rmax).floor().max(0.0) as u32;
    let x1 = ((cx + rmax).ceil() as u32).min(image.width() - 1);
    let y1 = ((cy + rmax).ceil() as u32).min(image.height() - 1);
    for y in y0..=y1 {
        for x in x0..=x1 {
            let inside = (x as f64 - cx).powi(2) + (y as f64 - cy).powi(2) <= rmax * rmax;
            if inside && pred(x, y) {
                image.set(x, y, STAIN_RGB);
            }
        }
    }
}

/// Smooth structured image pair for registration tests: `fixed` is `moving`
/// resampled under the ground-truth transform.
pub fn register_pair(
    width: u32,
    height: u32,
    truth: &AffineTransform2D,
    seed: u64,
) -> Result<(GrayImage, GrayImage)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // Sum of random Gaussian bumps plus a gentle global gradient.
    let bumps: Vec<(f64, f64, f64, f64)> = (0..8)
        .map(|_| {
            (
                rng.gen_range(0.2..0.8) * width as f64,
                rng.gen_range(0.2..0.8) * height as f64,
                rng.gen_range(4.0..11.0),
                rng.gen_range(60.0..140.0),
            )
        })
        .collect();
    let mut moving = GrayImage::zeros(width, height, 8);
    for y in 0..height {
        for x in 0..width {
            let mut v = 25.0 + 0.3 * x as f64 + 0.2 * y as f64;
            for &(bx, by, bs, ba) in &bumps {
                let d2 = (x as f64 - bx).powi(2) + (y as f64 - by).powi(2);
                v += ba * (-d2 / (2.0 * bs * bs)).exp();
            }
            moving.set(x, y, v.round().clamp(0.0, 255.0) as u16);
        }
    }
    let fixed = apply_transform(&moving, truth, Interp::Bilinear)?;
    Ok((moving, fixed))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn blob_truth_matches_geometry() {
        let p = blob_phantom(40, 40, &BlobPhantomConfig::default(), 1).unwrap();
        assert!(p.truth.get(20, 20));
        assert!(!p.truth.get(0, 0));
        let again = blob_phantom(40, 40, &BlobPhantomConfig::default(), 1).unwrap();
        assert_eq!(p.image, again.image, "seeded determinism");
    }

    #[test]
    fn nuclei_phantom_counts_by_construction() {
        let cfg = NucleiPhantomConfig { count: 20, ..Default::default() };
        let p = nuclei_phantom(220, 220, &cfg, 7).unwrap();
        assert_eq!(p.truth.count(), 20);
        assert_eq!(p.centers.len(), 20);
        // Disks never touch.
        for i in 0..20 {
            for j in i + 1..20 {
                let (ax, ay, ar) = p.centers[i];
                let (bx, by, br) = p.centers[j];
                let d = ((ax - bx).powi(2) + (ay - by).powi(2)).sqrt();
                assert!(d >= ar + br, "nuclei {i} and {j} overlap");
            }
        }
    }

    #[test]
    fn plate_centers_form_grid() {
        let cfg = PlatePhantomConfig { rows: 2, cols: 3, ..Default::default() };
        let p = plate_phantom(&cfg, 0).unwrap();
        assert_eq!(p.well_centers.len(), 6);
        // Row-major grid pitch.
        let dx = p.well_centers[1].0 - p.well_centers[0].0;
        assert!((dx - 2.6 * cfg.well_radius).abs() < 1e-9);
    }

    #[test]
    fn register_pair_identity_is_equal() {
        let (m, f) = register_pair(32, 32, &AffineTransform2D::identity(), 3).unwrap();
        assert_eq!(m, f);
    }
}

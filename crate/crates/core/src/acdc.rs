//! Fluorescence cell-nuclei detection and counting: bilateral + top-hat
//! pre-processing, Otsu seed selection with morphological refinement,
//! distance-transform maxima as markers, Laplacian-relief watershed.

use crate::error::{CoreError, Result};
use crate::imgcore::{
    bilateral_filter, close, connected_components, dilate, distance_transform, fill_holes,
    laplacian_relief, open, regional_maxima, remove_small, shape_features, watershed,
    white_tophat, BinaryMask, ComponentFeatures, Connectivity, EdtMode, GrayImage, LabelMap,
    StructuringElement,
};
use crate::threshold::{binarize, histogram, otsu, Polarity};

/// Pipeline constants; defaults follow the published setting.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AcdcConfig {
    pub tophat_radius: u32,
    pub min_area: usize,
    pub open_radius: u32,
    pub close_radius: u32,
    /// Half-width of the square window used for regional maxima (2 -> 5x5).
    pub maxima_halfwidth: u32,
    pub marker_dilate_radius: u32,
    pub edt_mode: EdtMode,
}

impl Default for AcdcConfig {
    fn default() -> Self {
        Self {
            tophat_radius: 21,
            min_area: 40,
            open_radius: 1,
            close_radius: 2,
            maxima_halfwidth: 2,
            marker_dilate_radius: 3,
            edt_mode: EdtMode::Chamfer5,
        }
    }
}

/// Per-image detection report.
#[derive(Clone, Debug)]
pub struct CellReport {
    pub count: usize,
    pub labels: LabelMap,
    pub features: Vec<ComponentFeatures>,
}

/// Denoise with an edge-preserving bilateral filter (spatial sigma 1, range
/// sigma = global standard deviation of the normalized image), then correct
/// the background with a white top-hat.
pub fn acdc_preprocess(img: &GrayImage, cfg: &AcdcConfig) -> Result<GrayImage> {
    // Sigmas are defined on the [0, 1] normalized scale; the integer-domain
    // equivalents scale by the dynamic range.
    let max = img.max_value() as f64;
    let sigma_range_norm = (img.std_dev() / max).max(1e-3);
    let window = crate::imgcore::bilateral_default_window(1.0);
    let smoothed = bilateral_filter(img, 1.0, sigma_range_norm * max, window)?;
    Ok(white_tophat(&smoothed, &StructuringElement::disk(cfg.tophat_radius)))
}

/// Seed selection: Otsu binarization, hole filling, opening, small-area
/// removal, closing; then chamfer EDT, regional maxima on the normalized
/// distance map, marker dilation and labeling. Returns the markers and the
/// refined cell mask.
pub fn acdc_markers(pre: &GrayImage, cfg: &AcdcConfig) -> Result<(LabelMap, BinaryMask)> {
    let hist = histogram(pre, None)?;
    let theta = otsu(&hist)?.theta_opt;
    let raw = binarize(pre, theta, Polarity::Above);
    if raw.is_all_zero() {
        return Err(CoreError::EmptyMask("no foreground after thresholding".into()));
    }
    let cells = fill_holes(&raw);
    let cells = open(&cells, &StructuringElement::disk(cfg.open_radius));
    let cells = remove_small(&cells, cfg.min_area, Connectivity::Eight);
    let cells = close(&cells, &StructuringElement::disk(cfg.close_radius));
    if cells.is_all_zero() {
        return Err(CoreError::EmptyMask("no cell-sized component survived".into()));
    }

    let edt = distance_transform(&cells, cfg.edt_mode);
    // Normalize the distance map to the 8-bit range.
    let max_d = edt.iter().cloned().filter(|d| d.is_finite()).fold(0.0f64, f64::max);
    let mut dist_img = GrayImage::zeros(pre.width(), pre.height(), 8);
    if max_d > 0.0 {
        for (i, &d) in edt.iter().enumerate() {
            dist_img.data_mut()[i] = ((d / max_d) * 255.0).round() as u16;
        }
    }
    let peaks = regional_maxima(&dist_img, &StructuringElement::square(cfg.maxima_halfwidth));
    // The background plateau (distance 0) is never a marker.
    let peaks = peaks.and(&cells)?;
    let seeds = dilate(&peaks, &StructuringElement::disk(cfg.marker_dilate_radius));
    let markers = connected_components(&seeds, Connectivity::Eight);
    if markers.count() == 0 {
        return Err(CoreError::EmptyMask("no markers found".into()));
    }
    Ok((markers, cells))
}

/// Full pipeline: markers from the pre-processed image, watershed on the
/// absolute Laplacian relief, restricted to the refined cell mask by a
/// background marker covering its complement.
pub fn acdc_segment(img: &GrayImage, cfg: &AcdcConfig) -> Result<CellReport> {
    let pre = acdc_preprocess(img, cfg)?;
    let (markers, cells) = match acdc_markers(&pre, cfg) {
        Ok(v) => v,
        // Blank fields are a legitimate zero-count outcome.
        Err(CoreError::EmptyMask(_)) | Err(CoreError::Degenerate(_)) => {
            return Ok(CellReport {
                count: 0,
                labels: LabelMap::zeros(img.width(), img.height()),
                features: Vec::new(),
            })
        }
        Err(e) => return Err(e),
    };
    let relief = laplacian_relief(&pre);

    // Background marker on the cell-mask complement keeps the flood honest.
    let bg_label = markers.count() + 1;
    let mut seeded = markers.clone();
    for y in 0..img.height() {
        for x in 0..img.width() {
            if !cells.get(x, y) && seeded.get(x, y) == 0 {
                seeded.set(x, y, bg_label);
            }
        }
    }
    seeded.set_count(bg_label);
    let flooded = watershed(&relief, &seeded)?;

    // Drop the background label and compact the rest.
    let mut labels = LabelMap::zeros(img.width(), img.height());
    for y in 0..img.height() {
        for x in 0..img.width() {
            let l = flooded.get(x, y);
            if l != bg_label && cells.get(x, y) {
                labels.set(x, y, l);
            }
        }
    }
    labels.set_count(markers.count());
    let mut features = Vec::with_capacity(markers.count() as usize);
    for label in 1..=markers.count() {
        features.push(shape_features(&labels, label)?);
    }
    Ok(CellReport { count: markers.count() as usize, labels, features })
}

/// Pearson correlation between automated and manual counts.
pub fn count_correlation(auto: &[f64], manual: &[f64]) -> Result<f64> {
    crate::metrics::pearson(auto, manual)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::phantom::{nuclei_phantom, NucleiPhantomConfig};

    #[test]
    fn preprocess_flattens_background() {
        let mut img = GrayImage::filled(64, 64, 8, 60);
        for y in 0..64i32 {
            for x in 0..64i32 {
                if (x - 32).pow(2) + (y - 20).pow(2) <= 36 {
                    img.set(x as u32, y as u32, 220);
                }
            }
        }
        let pre = acdc_preprocess(&img, &AcdcConfig::default()).unwrap();
        // Gray-morphology oracle: the flat background opens to itself, so
        // the top-hat zeroes it; the nucleus (smaller than the SE) remains.
        assert!(pre.get(1, 1) <= 2);
        assert!(pre.get(32, 20) >= 100);
    }

    #[test]
    fn preprocess_constant_image_is_zero() {
        let img = GrayImage::filled(32, 32, 8, 123);
        let pre = acdc_preprocess(&img, &AcdcConfig::default()).unwrap();
        assert!(pre.data().iter().all(|&v| v == 0));
    }

    #[test]
    fn markers_separate_two_disjoint_disks() {
        let mut img = GrayImage::filled(80, 80, 8, 10);
        for (cx, cy) in [(25i32, 40i32), (55, 40)] {
            for y in 0..80i32 {
                for x in 0..80i32 {
                    if (x - cx).pow(2) + (y - cy).pow(2) <= 81 {
                        img.set(x as u32, y as u32, 210);
                    }
                }
            }
        }
        let pre = acdc_preprocess(&img, &AcdcConfig::default()).unwrap();
        let (markers, cells) = acdc_markers(&pre, &AcdcConfig::default()).unwrap();
        assert_eq!(markers.count(), 2);
        assert!(cells.area() > 300);
    }

    #[test]
    fn markers_split_overlapping_disks() {
        // Two disks overlapping by ~20% of the radius: the EDT has two
        // separate peaks.
        let mut img = GrayImage::filled(80, 60, 8, 8);
        let r = 10i32;
        for (cx, cy) in [(30i32, 30i32), (48, 30)] {
            for y in 0..60i32 {
                for x in 0..80i32 {
                    if (x - cx).pow(2) + (y - cy).pow(2) <= r * r {
                        img.set(x as u32, y as u32, 200);
                    }
                }
            }
        }
        let pre = acdc_preprocess(&img, &AcdcConfig::default()).unwrap();
        let (markers, _) = acdc_markers(&pre, &AcdcConfig::default()).unwrap();
        assert_eq!(markers.count(), 2, "EDT peaks must separate the pair");
    }

    #[test]
    fn specks_below_min_area_leave_no_markers() {
        let mut img = GrayImage::filled(64, 64, 8, 12);
        for (cx, cy) in [(10u32, 10u32), (30, 40), (50, 20)] {
            for dy in 0..3u32 {
                for dx in 0..3u32 {
                    img.set(cx + dx, cy + dy, 220);
                }
            }
        }
        let pre = acdc_preprocess(&img, &AcdcConfig::default()).unwrap();
        assert!(matches!(
            acdc_markers(&pre, &AcdcConfig::default()),
            Err(CoreError::EmptyMask(_))
        ));
    }

    #[test]
    fn blank_field_counts_zero() {
        let img = GrayImage::filled(64, 64, 8, 17);
        let report = acdc_segment(&img, &AcdcConfig::default()).unwrap();
        assert_eq!(report.count, 0);
    }

    #[test]
    fn counts_exact_on_nonoverlapping_phantom() {
        let cfg = NucleiPhantomConfig { count: 25, radius_min: 6, radius_max: 10, ..Default::default() };
        let p = nuclei_phantom(256, 256, &cfg, 71).unwrap();
        let report = acdc_segment(&p.image, &AcdcConfig::default()).unwrap();
        assert_eq!(report.count, 25);
        // Every marker survives into exactly one label and labels stay in
        // the cell mask.
        let mut seen = vec![false; report.count + 1];
        for &l in report.labels.labels() {
            if l != 0 {
                seen[l as usize] = true;
            }
        }
        assert!(seen[1..].iter().all(|&s| s));
    }

    #[test]
    fn fused_pair_splits_at_the_neck() {
        let mut img = GrayImage::filled(96, 64, 8, 10);
        let r = 11i32;
        for (cx, cy) in [(38i32, 32i32), (57, 32)] {
            for y in 0..64i32 {
                for x in 0..96i32 {
                    if (x - cx).pow(2) + (y - cy).pow(2) <= r * r {
                        img.set(x as u32, y as u32, 215);
                    }
                }
            }
        }
        let report = acdc_segment(&img, &AcdcConfig::default()).unwrap();
        assert_eq!(report.count, 2);
        // The boundary between the two labels sits near the neck (x ~ 47).
        let left = report.labels.get(38, 32);
        let right = report.labels.get(57, 32);
        assert_ne!(left, 0);
        assert_ne!(right, 0);
        assert_ne!(left, right);
    }

    #[test]
    fn pipeline_is_deterministic() {
        let cfg = NucleiPhantomConfig { count: 12, ..Default::default() };
        let p = nuclei_phantom(128, 128, &cfg, 5).unwrap();
        let a = acdc_segment(&p.image, &AcdcConfig::default()).unwrap();
        let b = acdc_segment(&p.image, &AcdcConfig::default()).unwrap();
        assert_eq!(a.labels, b.labels);
        assert_eq!(a.count, b.count);
    }
}

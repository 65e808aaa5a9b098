//! Segmentation and enhancement evaluation metrics.

use crate::error::{CoreError, Result};
use crate::imgcore::{canny_edges, inner_boundary, BinaryMask, GrayImage};

/// Spatial overlap metrics, all expressed as percentages.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OverlapMetrics {
    pub dsc: f64,
    pub ji: f64,
    pub sen: f64,
    pub spc: f64,
    pub fpr: f64,
    pub fnr: f64,
}

/// Boundary and point-set distance metrics, in pixels.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DistanceMetrics {
    pub avg_d: f64,
    pub max_d: f64,
    pub hd: f64,
    pub mhd: f64,
}

/// Image enhancement metrics.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EnhancementMetrics {
    /// Peak signal-to-noise ratio in dB; `f64::INFINITY` when the images are
    /// identical (zero mean squared error).
    pub psnr: f64,
    /// Number of Canny edge pixels detected on the (re-mapped) enhanced image.
    pub num_edges: usize,
    /// Absolute mean brightness error normalized to `[0, 1]`.
    pub ambe: f64,
    /// Mean local structural similarity in `[-1, 1]`.
    pub ssim: f64,
}

/// Overlap metrics between a segmentation `s` and a gold standard `g`.
///
/// Specificity uses the unbalance-robust form `(1 - |FP|/|S|) * 100`.
pub fn overlap_metrics(s: &BinaryMask, g: &BinaryMask) -> Result<OverlapMetrics> {
    if s.width() != g.width() || s.height() != g.height() {
        return Err(CoreError::DimensionMismatch("segmentation vs gold standard".into()));
    }
    let mut tp = 0f64;
    let mut fp = 0f64;
    let mut fn_ = 0f64;
    let mut tn = 0f64;
    for (a, b) in s.data().iter().zip(g.data()) {
        match (a, b) {
            (1, 1) => tp += 1.0,
            (1, 0) => fp += 1.0,
            (0, 1) => fn_ += 1.0,
            _ => tn += 1.0,
        }
    }
    let s_area = tp + fp;
    let g_area = tp + fn_;
    if g_area == 0.0 {
        return Err(CoreError::EmptyMask("gold standard is empty (SEN undefined)".into()));
    }
    if s_area == 0.0 {
        return Err(CoreError::EmptyMask("segmentation is empty (SPC undefined)".into()));
    }
    Ok(OverlapMetrics {
        dsc: 200.0 * tp / (s_area + g_area),
        ji: 100.0 * tp / (tp + fp + fn_),
        sen: 100.0 * tp / (tp + fn_),
        spc: 100.0 * (1.0 - fp / s_area),
        fpr: if fp + tn > 0.0 { 100.0 * fp / (fp + tn) } else { 0.0 },
        fnr: 100.0 * fn_ / (fn_ + tp),
    })
}

fn boundary_points(mask: &BinaryMask) -> Vec<(f64, f64)> {
    let b = inner_boundary(mask);
    let mut pts = Vec::new();
    for y in 0..b.height() {
        for x in 0..b.width() {
            if b.get(x, y) {
                pts.push((x as f64, y as f64));
            }
        }
    }
    pts
}

fn directed_distances(from: &[(f64, f64)], to: &[(f64, f64)]) -> Vec<f64> {
    from.iter()
        .map(|&(x, y)| {
            to.iter()
                .map(|&(qx, qy)| ((x - qx).powi(2) + (y - qy).powi(2)).sqrt())
                .fold(f64::INFINITY, f64::min)
        })
        .collect()
}

/// Boundary distance metrics between `s` and `g`.
///
/// Boundaries are the 4-neighborhood inner boundaries; AvgD and MaxD are the
/// directed distances from the segmentation boundary to the gold one, HD is
/// the symmetric Hausdorff distance. MHD is the Mahalanobis-style distance
/// between the full pixel sets with pooled covariance.
pub fn distance_metrics(s: &BinaryMask, g: &BinaryMask) -> Result<DistanceMetrics> {
    if s.width() != g.width() || s.height() != g.height() {
        return Err(CoreError::DimensionMismatch("segmentation vs gold standard".into()));
    }
    let bs = boundary_points(s);
    let bg = boundary_points(g);
    if bs.is_empty() || bg.is_empty() {
        return Err(CoreError::EmptyMask("distance metrics need non-empty masks".into()));
    }
    let d_sg = directed_distances(&bs, &bg);
    let d_gs = directed_distances(&bg, &bs);
    let avg_d = d_sg.iter().sum::<f64>() / d_sg.len() as f64;
    let max_d = d_sg.iter().fold(0.0f64, |a, &b| a.max(b));
    let h_gs = d_gs.iter().fold(0.0f64, |a, &b| a.max(b));
    let hd = max_d.max(h_gs);
    Ok(DistanceMetrics { avg_d, max_d, hd, mhd: mahalanobis_distance(s, g) })
}

fn mask_points(mask: &BinaryMask) -> Vec<(f64, f64)> {
    let mut pts = Vec::new();
    for y in 0..mask.height() {
        for x in 0..mask.width() {
            if mask.get(x, y) {
                pts.push((x as f64, y as f64));
            }
        }
    }
    pts
}

fn mean_cov(pts: &[(f64, f64)]) -> ((f64, f64), [f64; 4]) {
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let (mut cxx, mut cxy, mut cyy) = (0.0, 0.0, 0.0);
    for &(x, y) in pts {
        cxx += (x - mx) * (x - mx);
        cxy += (x - mx) * (y - my);
        cyy += (y - my) * (y - my);
    }
    ((mx, my), [cxx / n, cxy / n, cxy / n, cyy / n])
}

fn mahalanobis_distance(s: &BinaryMask, g: &BinaryMask) -> f64 {
    let ps = mask_points(s);
    let pg = mask_points(g);
    let ((mx1, my1), c1) = mean_cov(&ps);
    let ((mx2, my2), c2) = mean_cov(&pg);
    let (n1, n2) = (ps.len() as f64, pg.len() as f64);
    let pool = [
        (n1 * c1[0] + n2 * c2[0]) / (n1 + n2),
        (n1 * c1[1] + n2 * c2[1]) / (n1 + n2),
        (n1 * c1[2] + n2 * c2[2]) / (n1 + n2),
        (n1 * c1[3] + n2 * c2[3]) / (n1 + n2),
    ];
    let (dx, dy) = (mx1 - mx2, my1 - my2);
    if dx == 0.0 && dy == 0.0 {
        return 0.0;
    }
    let det = pool[0] * pool[3] - pool[1] * pool[2];
    if det.abs() < 1e-12 {
        // Degenerate covariance (for instance single-pixel masks): fall back
        // to the Euclidean distance between the set means.
        return (dx * dx + dy * dy).sqrt();
    }
    let inv = [pool[3] / det, -pool[1] / det, -pool[2] / det, pool[0] / det];
    let q = dx * (inv[0] * dx + inv[1] * dy) + dy * (inv[2] * dx + inv[3] * dy);
    q.max(0.0).sqrt()
}

/// Volume agreement: absolute average volume difference and volumetric
/// similarity.
pub fn volume_metrics(s: &BinaryMask, g: &BinaryMask) -> Result<(f64, f64)> {
    let vs = s.area() as f64;
    let vg = g.area() as f64;
    if vg == 0.0 {
        return Err(CoreError::EmptyMask("gold standard is empty".into()));
    }
    let avd = (vs - vg).abs() / vg;
    let similarity = 1.0 - (vs - vg).abs() / (vs + vg);
    Ok((avd, similarity))
}

/// Canny parameters used when counting detected edges.
pub const EDGE_SIGMA: f64 = 1.4;
pub const EDGE_LO: f64 = 0.1;
pub const EDGE_HI: f64 = 0.3;

/// Enhancement metrics comparing `enh` against `orig`.
///
/// `declared_out_range`: the enhancement method's nominal output gray range.
/// When given, the enhanced image is linearly re-mapped from that range onto
/// the original observed range before comparison; when `None` the images are
/// compared directly (the method declares the same range as the input).
pub fn enhancement_metrics(
    orig: &GrayImage,
    enh: &GrayImage,
    declared_out_range: Option<(u16, u16)>,
) -> Result<EnhancementMetrics> {
    if orig.width() != enh.width() || orig.height() != enh.height() {
        return Err(CoreError::DimensionMismatch("orig vs enhanced".into()));
    }
    let (in_lo, in_hi) = orig.min_max();
    if in_lo == in_hi {
        return Err(CoreError::Degenerate("original image is constant".into()));
    }
    let l = (in_hi - in_lo) as f64;

    // Re-map the enhanced values onto the original range when the method
    // declares a different output range.
    let remapped: Vec<f64> = match declared_out_range {
        None => enh.data().iter().map(|&v| v as f64).collect(),
        Some((out_lo, out_hi)) => {
            if out_lo >= out_hi {
                return Err(CoreError::InvalidParameter("declared output range is empty".into()));
            }
            enh.data()
                .iter()
                .map(|&v| {
                    (v as f64 - out_lo as f64) * l / (out_hi as f64 - out_lo as f64) + in_lo as f64
                })
                .collect()
        }
    };

    // PSNR with the observed maximum as peak value.
    let n = orig.len() as f64;
    let mse: f64 = orig
        .data()
        .iter()
        .zip(&remapped)
        .map(|(&a, &b)| (a as f64 - b).powi(2))
        .sum::<f64>()
        / n;
    let psnr = if mse == 0.0 {
        f64::INFINITY
    } else {
        10.0 * ((in_hi as f64).powi(2) / mse).log10()
    };

    // Edge count on the re-mapped enhanced image.
    let remap_img = GrayImage::new(
        enh.width(),
        enh.height(),
        orig.depth(),
        remapped.iter().map(|&v| v.round().clamp(0.0, orig.max_value() as f64) as u16).collect(),
    )?;
    let num_edges = canny_edges(&remap_img, EDGE_SIGMA, EDGE_LO, EDGE_HI)?.area();

    let mean_orig = orig.mean();
    let mean_enh: f64 = remapped.iter().sum::<f64>() / n;
    let ambe = (mean_orig - mean_enh).abs() / l;

    let orig_f: Vec<f64> = orig.data().iter().map(|&v| v as f64).collect();
    let ssim = ssim_mean(&orig_f, &remapped, orig.width() as usize, orig.height() as usize, l);

    Ok(EnhancementMetrics { psnr, num_edges, ambe, ssim })
}

/// SSIM window side (sliding, stride 1, aggregated by mean).
const SSIM_WINDOW: usize = 8;

fn ssim_mean(a: &[f64], b: &[f64], w: usize, h: usize, dynamic_range: f64) -> f64 {
    let k1 = (0.01 * dynamic_range).powi(2);
    let k2 = (0.03 * dynamic_range).powi(2);
    let k3 = k2 / 2.0;
    let side = SSIM_WINDOW.min(w).min(h);
    let mut sum = 0.0;
    let mut count = 0usize;
    for y0 in 0..=(h - side) {
        for x0 in 0..=(w - side) {
            let mut ma = 0.0;
            let mut mb = 0.0;
            for y in y0..y0 + side {
                for x in x0..x0 + side {
                    ma += a[y * w + x];
                    mb += b[y * w + x];
                }
            }
            let nn = (side * side) as f64;
            ma /= nn;
            mb /= nn;
            let (mut va, mut vb, mut cov) = (0.0, 0.0, 0.0);
            for y in y0..y0 + side {
                for x in x0..x0 + side {
                    let da = a[y * w + x] - ma;
                    let db = b[y * w + x] - mb;
                    va += da * da;
                    vb += db * db;
                    cov += da * db;
                }
            }
            va /= nn;
            vb /= nn;
            cov /= nn;
            let (sa, sb) = (va.sqrt(), vb.sqrt());
            let lum = (2.0 * ma * mb + k1) / (ma * ma + mb * mb + k1);
            let con = (2.0 * sa * sb + k2) / (va + vb + k2);
            let stru = (cov + k3) / (sa * sb + k3);
            sum += lum * con * stru;
            count += 1;
        }
    }
    sum / count as f64
}

/// Pearson product-moment correlation coefficient.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(CoreError::DimensionMismatch("series lengths differ".into()));
    }
    if x.len() < 3 {
        return Err(CoreError::InvalidInput("pearson needs at least 3 samples".into()));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (&a, &b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(CoreError::Degenerate("zero variance series".into()));
    }
    Ok(sxy / (sxx * syy).sqrt())
}

//! Fuzzy C-means clustering and the FCM-based segmentation pipelines:
//! brain GTV (C=2), necrosis extraction inside a GTV (C=2), and
//! multispectral prostate gland segmentation (C=3).

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{CoreError, Result};
use crate::imgcore::{
    connected_components, contrast_stretch_masked, convex_hull, erode, fill_holes, open,
    remove_small, shape_features, stick_filter, BinaryMask, Connectivity, GrayImage,
    StructuringElement,
};

/// Row-major sample matrix: `n` feature vectors of dimension `d`.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureMatrix {
    n: usize,
    d: usize,
    rows: Vec<f64>,
}

impl FeatureMatrix {
    pub fn new(n: usize, d: usize, rows: Vec<f64>) -> Result<Self> {
        if rows.len() != n * d {
            return Err(CoreError::DimensionMismatch(format!("{} values != {n}x{d}", rows.len())));
        }
        if rows.iter().any(|v| !v.is_finite()) {
            return Err(CoreError::InvalidInput("feature values must be finite".into()));
        }
        Ok(Self { n, d, rows })
    }

    pub fn from_scalar(values: &[f64]) -> Result<Self> {
        Self::new(values.len(), 1, values.to_vec())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.d
    }

    #[inline]
    pub fn sample(&self, k: usize) -> &[f64] {
        &self.rows[k * self.d..(k + 1) * self.d]
    }
}

/// Fuzzy partition: memberships `u[(i, k)]` (C x N), centroids, and the
/// objective value per iteration.
#[derive(Clone, Debug)]
pub struct FuzzyPartition {
    c: usize,
    n: usize,
    u: Vec<f64>,
    centroids: Vec<Vec<f64>>,
    pub j_history: Vec<f64>,
}

impl FuzzyPartition {
    pub fn c(&self) -> usize {
        self.c
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn membership(&self, cluster: usize, sample: usize) -> f64 {
        self.u[cluster * self.n + sample]
    }

    pub fn centroid(&self, cluster: usize) -> &[f64] {
        &self.centroids[cluster]
    }

    /// Index of the maximum-membership cluster per sample; ties go to the
    /// lower cluster index.
    pub fn argmax(&self) -> Vec<usize> {
        (0..self.n)
            .map(|k| {
                let mut best = 0usize;
                let mut best_u = self.membership(0, k);
                for i in 1..self.c {
                    let u = self.membership(i, k);
                    if u > best_u {
                        best_u = u;
                        best = i;
                    }
                }
                best
            })
            .collect()
    }
}

/// Cluster selector for [`defuzzify`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ClusterSelect {
    /// Cluster whose centroid has the largest mean feature value.
    Brightest,
    /// Cluster whose centroid has the smallest mean feature value.
    Darkest,
    Index(usize),
}

/// Fuzzy C-means. Memberships start uniform-random (normalized per column)
/// from the seeded generator; centroids and memberships alternate per
/// Bezdek's update equations until the objective improves by at most
/// `eps_tol` or `max_iter` iterations have run.
pub fn fcm(
    data: &FeatureMatrix,
    c: usize,
    m: f64,
    eps_tol: f64,
    max_iter: u32,
    seed: u64,
) -> Result<FuzzyPartition> {
    if c < 2 {
        return Err(CoreError::InvalidParameter("fcm needs at least 2 clusters".into()));
    }
    if data.n < c {
        return Err(CoreError::InvalidInput(format!("{} samples < {c} clusters", data.n)));
    }
    if m <= 1.0 {
        return Err(CoreError::InvalidParameter(format!("fuzzifier must be > 1, got {m}")));
    }
    let n = data.n;
    let d = data.d;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    // Random memberships, normalized per sample column.
    let mut u = vec![0.0f64; c * n];
    for k in 0..n {
        let mut col_sum = 0.0;
        for i in 0..c {
            let v: f64 = rng.gen_range(1e-9..1.0);
            u[i * n + k] = v;
            col_sum += v;
        }
        for i in 0..c {
            u[i * n + k] /= col_sum;
        }
    }

    let mut centroids = vec![vec![0.0f64; d]; c];
    let mut j_history = Vec::new();
    let mut prev_j = f64::INFINITY;

    for _ in 0..max_iter {
        // Centroid update.
        for (i, centroid) in centroids.iter_mut().enumerate() {
            let mut num = vec![0.0f64; d];
            let mut den = 0.0f64;
            for k in 0..n {
                let w = u[i * n + k].powf(m);
                den += w;
                for (j, nj) in num.iter_mut().enumerate() {
                    *nj += w * data.rows[k * d + j];
                }
            }
            for (j, nj) in num.iter().enumerate() {
                centroid[j] = if den > 0.0 { nj / den } else { 0.0 };
            }
        }

        // Membership update.
        let exponent = 2.0 / (m - 1.0);
        let mut dist2 = vec![0.0f64; c];
        for k in 0..n {
            let x = data.sample(k);
            let mut coincident = None;
            for i in 0..c {
                let mut s = 0.0;
                for j in 0..d {
                    let diff = x[j] - centroids[i][j];
                    s += diff * diff;
                }
                dist2[i] = s;
                if s == 0.0 && coincident.is_none() {
                    coincident = Some(i);
                }
            }
            match coincident {
                Some(hit) => {
                    // Sample sits exactly on a centroid: hard-assign.
                    for i in 0..c {
                        u[i * n + k] = if i == hit { 1.0 } else { 0.0 };
                    }
                }
                None => {
                    for i in 0..c {
                        let mut denom = 0.0;
                        for &dj in dist2.iter() {
                            denom += (dist2[i] / dj).powf(exponent / 2.0);
                        }
                        u[i * n + k] = 1.0 / denom;
                    }
                }
            }
        }

        // Objective.
        let mut j_val = 0.0;
        for i in 0..c {
            for k in 0..n {
                let x = data.sample(k);
                let mut s = 0.0;
                for jj in 0..d {
                    let diff = x[jj] - centroids[i][jj];
                    s += diff * diff;
                }
                j_val += u[i * n + k].powf(m) * s;
            }
        }
        j_history.push(j_val);
        if (prev_j - j_val).abs() <= eps_tol {
            break;
        }
        prev_j = j_val;
    }

    Ok(FuzzyPartition { c, n, u, centroids, j_history })
}

/// Resolve a [`ClusterSelect`] to a concrete cluster index by centroid value
/// ordering (mean over feature dimensions).
pub fn select_cluster(part: &FuzzyPartition, select: ClusterSelect) -> Result<usize> {
    match select {
        ClusterSelect::Index(i) => {
            if i >= part.c {
                return Err(CoreError::InvalidParameter(format!("cluster {i} out of range")));
            }
            Ok(i)
        }
        ClusterSelect::Brightest | ClusterSelect::Darkest => {
            let means: Vec<f64> = part
                .centroids
                .iter()
                .map(|v| v.iter().sum::<f64>() / v.len() as f64)
                .collect();
            let mut best = 0usize;
            for i in 1..means.len() {
                let better = match select {
                    ClusterSelect::Brightest => means[i] > means[best],
                    _ => means[i] < means[best],
                };
                if better {
                    best = i;
                }
            }
            Ok(best)
        }
    }
}

/// Crisp mask of the samples whose maximum membership belongs to the selected
/// cluster, scattered back onto the pixel grid through `sample_coords`.
pub fn defuzzify(
    part: &FuzzyPartition,
    select: ClusterSelect,
    sample_coords: &[(u32, u32)],
    width: u32,
    height: u32,
) -> Result<BinaryMask> {
    if sample_coords.len() != part.n {
        return Err(CoreError::DimensionMismatch("samples vs coordinates".into()));
    }
    let target = select_cluster(part, select)?;
    let assign = part.argmax();
    let mut mask = BinaryMask::zeros(width, height);
    for (k, &(x, y)) in sample_coords.iter().enumerate() {
        if assign[k] == target {
            mask.set(x, y, true);
        }
    }
    Ok(mask)
}

/// Pixels selected by a mask, as (coordinates, stretched [0,1] intensities).
fn roi_samples(img: &GrayImage, roi: &BinaryMask) -> Result<(Vec<(u32, u32)>, Vec<f64>)> {
    if img.width() != roi.width() || img.height() != roi.height() {
        return Err(CoreError::DimensionMismatch("image vs roi".into()));
    }
    let stretched = contrast_stretch_masked(img, roi, 1, img.max_value())?;
    let mut coords = Vec::new();
    let mut values = Vec::new();
    let scale = img.max_value() as f64;
    for y in 0..img.height() {
        for x in 0..img.width() {
            if roi.get(x, y) {
                coords.push((x, y));
                values.push(stretched.get(x, y) as f64 / scale);
            }
        }
    }
    if coords.is_empty() {
        return Err(CoreError::EmptyMask("roi".into()));
    }
    Ok((coords, values))
}

fn require_multilevel(values: &[f64]) -> Result<()> {
    let first = values[0];
    if values.iter().all(|&v| v == first) {
        return Err(CoreError::Degenerate("roi has a single intensity level".into()));
    }
    Ok(())
}

/// FCM iteration defaults shared by the pipelines.
pub const FCM_FUZZIFIER: f64 = 2.0;
pub const FCM_EPS_TOL: f64 = 1e-6;
pub const FCM_MAX_ITER: u32 = 200;
/// Minimum component area kept by the GTV pipeline (not from the thesis;
/// see module docs).
pub const GTV_MIN_AREA: usize = 10;

/// Brain GTV pipeline: stretch the ROI, cluster intensities with C=2, take
/// the brightest cluster, drop small components, and close the region with
/// its convex hull (necrotic holes end up inside).
pub fn gtv_pipeline(img: &GrayImage, roi: &BinaryMask, seed: u64) -> Result<BinaryMask> {
    let (coords, values) = roi_samples(img, roi)?;
    require_multilevel(&values)?;
    let data = FeatureMatrix::from_scalar(&values)?;
    let part = fcm(&data, 2, FCM_FUZZIFIER, FCM_EPS_TOL, FCM_MAX_ITER, seed)?;
    let mask = defuzzify(&part, ClusterSelect::Brightest, &coords, img.width(), img.height())?;
    let mask = remove_small(&mask, GTV_MIN_AREA, Connectivity::Eight);
    if mask.is_all_zero() {
        return Err(CoreError::EmptyMask("no bright cluster component survived".into()));
    }
    convex_hull(&mask)
}

/// Necrosis inclusion step: a C=3 run identifies the darkest cluster; any of
/// its components touching the band added by the convex hull
/// (`post_hull XOR pre_hull`) is merged into the final mask.
pub fn necrosis_inclusion(
    img: &GrayImage,
    roi: &BinaryMask,
    pre_hull: &BinaryMask,
    post_hull: &BinaryMask,
    seed: u64,
) -> Result<BinaryMask> {
    let (coords, values) = roi_samples(img, roi)?;
    require_multilevel(&values)?;
    let data = FeatureMatrix::from_scalar(&values)?;
    let part = fcm(&data, 3, FCM_FUZZIFIER, FCM_EPS_TOL, FCM_MAX_ITER, seed)?;
    let dark = defuzzify(&part, ClusterSelect::Darkest, &coords, img.width(), img.height())?;
    let band = post_hull.xor(pre_hull)?;
    let labels = connected_components(&dark, Connectivity::Eight);
    let mut out = post_hull.clone();
    for label in 1..=labels.count() {
        let comp = labels.mask_of(label);
        if !comp.and(&band)?.is_all_zero() {
            out = out.or(&comp)?;
        }
    }
    Ok(out)
}

/// GTV area above which the pre-erosion uses a 2-pixel disk.
pub const NEXT_EROSION_AREA: usize = 80;
/// Minimum necrosis component area (4-connectivity).
pub const NEXT_MIN_AREA: usize = 5;

/// NeXt pipeline: erode the GTV (disk radius 2 when its area exceeds 80
/// pixels, 1 otherwise), stretch the eroded region, cluster with C=2, keep
/// the darkest cluster, remove components under 5 pixels (4-connectivity)
/// and fill holes.
pub fn next_pipeline(img: &GrayImage, gtv: &BinaryMask, seed: u64) -> Result<BinaryMask> {
    if gtv.is_all_zero() {
        return Err(CoreError::EmptyMask("gtv".into()));
    }
    let radius = if gtv.area() > NEXT_EROSION_AREA { 2 } else { 1 };
    let eroded = erode(gtv, &StructuringElement::disk(radius));
    if eroded.is_all_zero() {
        return Err(CoreError::Degenerate("gtv vanished under the pre-erosion".into()));
    }
    let (coords, values) = roi_samples(img, &eroded)?;
    require_multilevel(&values)?;
    let data = FeatureMatrix::from_scalar(&values)?;
    let part = fcm(&data, 2, FCM_FUZZIFIER, FCM_EPS_TOL, FCM_MAX_ITER, seed)?;
    let dark = defuzzify(&part, ClusterSelect::Darkest, &coords, img.width(), img.height())?;
    let cleaned = remove_small(&dark, NEXT_MIN_AREA, Connectivity::Four);
    Ok(fill_holes(&cleaned))
}

/// Stick filter parameters used by the prostate pipeline.
pub const STICK_LENGTH: u32 = 5;
pub const STICK_THICKNESS: u32 = 1;
/// Minimum component area for the prostate cluster.
pub const PROSTATE_MIN_AREA: usize = 500;

/// Multispectral prostate pipeline on co-registered T2w and T1w images:
/// stick filter + stretch per channel, C=3 FCM on the joint (t2, t1)
/// feature, prostate cluster selection, size/morphology refinement,
/// nearest-to-center component, convex hull, final opening.
///
/// The prostate cluster is the one with the highest total membership inside
/// a small window around the ROI center (the gland sits at the crop center
/// by protocol).
pub fn prostate_pipeline(
    t2: &GrayImage,
    t1_coregistered: &GrayImage,
    roi: &BinaryMask,
    seed: u64,
) -> Result<BinaryMask> {
    if t2.width() != t1_coregistered.width() || t2.height() != t1_coregistered.height() {
        return Err(CoreError::DimensionMismatch("t2 vs t1".into()));
    }
    if roi.is_all_zero() {
        return Err(CoreError::EmptyMask("roi".into()));
    }
    let f2 = stick_filter(t2, STICK_LENGTH, STICK_THICKNESS)?;
    let f1 = stick_filter(t1_coregistered, STICK_LENGTH, STICK_THICKNESS)?;
    let (coords, v2) = roi_samples(&f2, roi)?;
    let (_, v1) = roi_samples(&f1, roi)?;
    if v2.iter().all(|&v| v == v2[0]) && v1.iter().all(|&v| v == v1[0]) {
        return Err(CoreError::Degenerate("roi has a single joint feature".into()));
    }
    let mut rows = Vec::with_capacity(coords.len() * 2);
    for k in 0..coords.len() {
        rows.push(v2[k]);
        rows.push(v1[k]);
    }
    let data = FeatureMatrix::new(coords.len(), 2, rows)?;
    let part = fcm(&data, 3, FCM_FUZZIFIER, FCM_EPS_TOL, FCM_MAX_ITER, seed)?;

    // Cluster with the largest membership mass near the ROI center.
    let (bx, by, bw, bh) = roi.bounding_box().expect("non-empty roi");
    let cx = bx as f64 + (bw as f64 - 1.0) / 2.0;
    let cy = by as f64 + (bh as f64 - 1.0) / 2.0;
    let window = 2.0f64.max(bw.min(bh) as f64 / 8.0);
    let mut mass = vec![0.0f64; 3];
    for (k, &(x, y)) in coords.iter().enumerate() {
        if (x as f64 - cx).abs() <= window && (y as f64 - cy).abs() <= window {
            for (i, mi) in mass.iter_mut().enumerate() {
                *mi += part.membership(i, k);
            }
        }
    }
    let target = mass
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.partial_cmp(b.1).expect("finite"))
        .map(|(i, _)| i)
        .expect("three clusters");

    let mask = defuzzify(&part, ClusterSelect::Index(target), &coords, t2.width(), t2.height())?;
    let mask = remove_small(&mask, PROSTATE_MIN_AREA, Connectivity::Eight);
    let mask = open(&mask, &StructuringElement::square(2));
    if mask.is_all_zero() {
        return Err(CoreError::EmptyMask("no prostate-sized component survived".into()));
    }
    // Component nearest to the crop center.
    let labels = connected_components(&mask, Connectivity::Eight);
    let mut best_label = 1;
    let mut best_dist = f64::INFINITY;
    for label in 1..=labels.count() {
        let f = shape_features(&labels, label)?;
        let d = (f.centroid.0 - cx).powi(2) + (f.centroid.1 - cy).powi(2);
        if d < best_dist {
            best_dist = d;
            best_label = label;
        }
    }
    let selected = labels.mask_of(best_label);
    let hull = convex_hull(&selected)?;
    Ok(open(&hull, &StructuringElement::disk(3)))
}

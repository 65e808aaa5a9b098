//! Joint histograms and (normalized) mutual information.

use crate::error::{CoreError, Result};
use crate::imgcore::GrayImage;

/// Joint gray-level frequency table of two same-sized images.
#[derive(Clone, Debug)]
pub struct JointHistogram {
    pub bins: usize,
    /// Row-major `bins x bins` counts (row = image A bin).
    pub table: Vec<f64>,
    pub total: f64,
}

impl JointHistogram {
    pub fn marginal_a(&self) -> Vec<f64> {
        (0..self.bins)
            .map(|i| self.table[i * self.bins..(i + 1) * self.bins].iter().sum())
            .collect()
    }

    pub fn marginal_b(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.bins];
        for i in 0..self.bins {
            for j in 0..self.bins {
                out[j] += self.table[i * self.bins + j];
            }
        }
        out
    }

    /// Optional Parzen-style smoothing: separable [1 2 1]/4 blur of the
    /// joint table (one-bin Gaussian approximation).
    pub fn smooth(&mut self) {
        let b = self.bins;
        let mut tmp = vec![0.0f64; b * b];
        for i in 0..b {
            for j in 0..b {
                let c = self.table[i * b + j];
                let l = if j > 0 { self.table[i * b + j - 1] } else { c };
                let r = if j + 1 < b { self.table[i * b + j + 1] } else { c };
                tmp[i * b + j] = 0.25 * l + 0.5 * c + 0.25 * r;
            }
        }
        for j in 0..b {
            for i in 0..b {
                let c = tmp[i * b + j];
                let u = if i > 0 { tmp[(i - 1) * b + j] } else { c };
                let d = if i + 1 < b { tmp[(i + 1) * b + j] } else { c };
                self.table[i * b + j] = 0.25 * u + 0.5 * c + 0.25 * d;
            }
        }
    }
}

fn bin_index(v: u16, lo: u16, hi: u16, bins: usize) -> usize {
    if hi == lo {
        return 0;
    }
    let t = (v - lo) as f64 / (hi - lo + 1) as f64;
    ((t * bins as f64) as usize).min(bins - 1)
}

/// Joint histogram over the full common domain (or the pixels selected by
/// `mask` when given). Bins span each image's own observed range.
pub fn joint_histogram_masked(
    a: &GrayImage,
    b: &GrayImage,
    bins: usize,
    mask: Option<&[bool]>,
) -> Result<JointHistogram> {
    if a.width() != b.width() || a.height() != b.height() {
        return Err(CoreError::DimensionMismatch("joint histogram inputs".into()));
    }
    if bins < 2 {
        return Err(CoreError::InvalidParameter("need at least 2 bins".into()));
    }
    if let Some(m) = mask {
        if m.len() != a.len() {
            return Err(CoreError::DimensionMismatch("mask length".into()));
        }
    }
    let (alo, ahi) = a.min_max();
    let (blo, bhi) = b.min_max();
    let mut table = vec![0.0f64; bins * bins];
    let mut total = 0.0;
    for i in 0..a.len() {
        if let Some(m) = mask {
            if !m[i] {
                continue;
            }
        }
        let ia = bin_index(a.data()[i], alo, ahi, bins);
        let ib = bin_index(b.data()[i], blo, bhi, bins);
        table[ia * bins + ib] += 1.0;
        total += 1.0;
    }
    if total == 0.0 {
        return Err(CoreError::EmptyMask("empty overlap".into()));
    }
    Ok(JointHistogram { bins, table, total })
}

pub fn joint_histogram(a: &GrayImage, b: &GrayImage, bins: usize) -> Result<JointHistogram> {
    joint_histogram_masked(a, b, bins, None)
}

fn entropy(probs: impl Iterator<Item = f64>) -> f64 {
    let mut h = 0.0;
    for p in probs {
        if p > 0.0 {
            h -= p * p.ln();
        }
    }
    h
}

/// Mutual information (nats) from a joint table.
pub fn mutual_information_from(hist: &JointHistogram) -> f64 {
    let total = hist.table.iter().sum::<f64>();
    let pa = hist.marginal_a();
    let pb = hist.marginal_b();
    let mut mi = 0.0;
    for i in 0..hist.bins {
        for j in 0..hist.bins {
            let pab = hist.table[i * hist.bins + j] / total;
            if pab > 0.0 {
                mi += pab * (pab / (pa[i] / total * pb[j] / total)).ln();
            }
        }
    }
    mi
}

/// Normalized mutual information `(H(A) + H(B)) / H(A,B)` from a joint table.
pub fn normalized_mi_from(hist: &JointHistogram) -> Result<f64> {
    let total = hist.table.iter().sum::<f64>();
    let ha = entropy(hist.marginal_a().into_iter().map(|c| c / total));
    let hb = entropy(hist.marginal_b().into_iter().map(|c| c / total));
    let hab = entropy(hist.table.iter().map(|&c| c / total));
    if hab == 0.0 {
        return Err(CoreError::Degenerate("zero joint entropy (both images constant)".into()));
    }
    Ok((ha + hb) / hab)
}

/// Mutual information of two images, `0 log 0 = 0`, natural log.
pub fn mutual_information(a: &GrayImage, b: &GrayImage, bins: usize) -> Result<f64> {
    Ok(mutual_information_from(&joint_histogram(a, b, bins)?))
}

/// Normalized mutual information of two images.
pub fn normalized_mi(a: &GrayImage, b: &GrayImage, bins: usize) -> Result<f64> {
    normalized_mi_from(&joint_histogram(a, b, bins)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn textured(w: u32, h: u32, f: impl Fn(u32, u32) -> u16) -> GrayImage {
        let mut img = GrayImage::zeros(w, h, 8);
        for y in 0..h {
            for x in 0..w {
                img.set(x, y, f(x, y));
            }
        }
        img
    }

    #[test]
    fn identical_images_give_diagonal_table() {
        let a = textured(8, 8, |x, y| ((x * 13 + y * 31) % 200) as u16);
        let jh = joint_histogram(&a, &a, 16).unwrap();
        for i in 0..16 {
            for j in 0..16 {
                if i != j {
                    assert_eq!(jh.table[i * 16 + j], 0.0);
                }
            }
        }
    }

    #[test]
    fn constant_image_single_row() {
        let a = textured(4, 4, |_, _| 9);
        let b = textured(4, 4, |x, y| (x * 16 + y) as u16);
        let jh = joint_histogram(&a, &b, 8).unwrap();
        let ma = jh.marginal_a();
        assert_eq!(ma[0], 16.0);
        assert!(ma[1..].iter().all(|&c| c == 0.0));
    }

    #[test]
    fn marginals_match_per_image_histograms() {
        let a = textured(8, 8, |x, y| ((x * 7 + y * 3) % 250) as u16);
        let b = textured(8, 8, |x, y| ((x * 5 + y * 11) % 250) as u16);
        let jh = joint_histogram(&a, &b, 10).unwrap();
        let ma = jh.marginal_a();
        // Recompute A's binned histogram directly.
        let (lo, hi) = a.min_max();
        let mut direct = vec![0.0; 10];
        for &v in a.data() {
            direct[bin_index(v, lo, hi, 10)] += 1.0;
        }
        assert_eq!(ma, direct);
    }

    #[test]
    fn mi_of_constant_is_zero_and_self_is_entropy() {
        let c = textured(6, 6, |_, _| 42);
        let b = textured(6, 6, |x, y| ((x + 6 * y) * 4) as u16);
        assert_relative_eq!(mutual_information(&c, &b, 8).unwrap(), 0.0);
        // I(A, A) = H(A).
        let jh = joint_histogram(&b, &b, 8).unwrap();
        let total = jh.total;
        let ha = entropy(jh.marginal_a().into_iter().map(|x| x / total));
        assert_relative_eq!(mutual_information(&b, &b, 8).unwrap(), ha, epsilon = 1e-12);
    }

    #[test]
    fn mi_symmetry_and_nonnegativity() {
        let a = textured(9, 9, |x, y| ((x * 29 + y * 17) % 230) as u16);
        let b = textured(9, 9, |x, y| ((x * 3 + y * 43) % 230) as u16);
        let ab = mutual_information(&a, &b, 12).unwrap();
        let ba = mutual_information(&b, &a, 12).unwrap();
        assert_relative_eq!(ab, ba, epsilon = 1e-12);
        assert!(ab >= 0.0);
    }

    #[test]
    fn mi_matches_double_sum_oracle() {
        let a = textured(10, 10, |x, y| ((x * 37 + y * 13) % 240) as u16);
        let b = textured(10, 10, |x, y| ((x * 11 + y * 53) % 240) as u16);
        let bins = 8;
        let mi = mutual_information(&a, &b, bins).unwrap();
        // Independent double-sum evaluation.
        let jh = joint_histogram(&a, &b, bins).unwrap();
        let n = jh.total;
        let mut oracle = 0.0;
        for i in 0..bins {
            for j in 0..bins {
                let pab = jh.table[i * bins + j] / n;
                if pab == 0.0 {
                    continue;
                }
                let pa: f64 = (0..bins).map(|k| jh.table[i * bins + k]).sum::<f64>() / n;
                let pb: f64 = (0..bins).map(|k| jh.table[k * bins + j]).sum::<f64>() / n;
                oracle += pab * (pab / (pa * pb)).ln();
            }
        }
        assert_relative_eq!(mi, oracle, epsilon = 1e-12);
    }

    #[test]
    fn nmi_identities_and_range() {
        let a = textured(8, 8, |x, y| ((x * 19 + y * 7) % 200) as u16);
        assert_relative_eq!(normalized_mi(&a, &a, 16).unwrap(), 2.0, epsilon = 1e-12);
        let b = textured(8, 8, |x, y| ((x * 5 + y * 31) % 200) as u16);
        let nmi = normalized_mi(&a, &b, 16).unwrap();
        assert!((1.0..=2.0 + 1e-12).contains(&nmi), "nmi {nmi}");
        // Both constant: zero joint entropy error.
        let c = textured(4, 4, |_, _| 3);
        assert!(normalized_mi(&c, &c, 8).is_err());
    }

    #[test]
    fn nmi_of_independent_uniform_pair_approaches_one() {
        // Large sampled estimate: independent pseudo-random pixels.
        let mut state = 12345u64;
        let mut next = move || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((state >> 33) % 256) as u16
        };
        let mut a = GrayImage::zeros(64, 64, 8);
        let mut b = GrayImage::zeros(64, 64, 8);
        for y in 0..64 {
            for x in 0..64 {
                a.set(x, y, next());
                b.set(x, y, next());
            }
        }
        let nmi = normalized_mi(&a, &b, 8).unwrap();
        assert!((nmi - 1.0).abs() < 0.05, "nmi {nmi}");
    }

    #[test]
    fn mi_invariant_under_bin_relabeling() {
        // Permuting one image's bin labels leaves MI unchanged: permute the
        // 8 intensity levels of a toy image.
        let a = textured(8, 8, |x, y| (((x + y) % 8) * 32) as u16);
        let b = textured(8, 8, |x, y| (((x * 2 + y) % 8) * 32) as u16);
        let perm = [5usize, 2, 7, 0, 3, 6, 1, 4];
        let b2 = textured(8, 8, |x, y| (perm[((x * 2 + y) % 8) as usize] * 32) as u16);
        let m1 = mutual_information(&a, &b, 8).unwrap();
        let m2 = mutual_information(&a, &b2, 8).unwrap();
        assert_relative_eq!(m1, m2, epsilon = 1e-12);
    }
}

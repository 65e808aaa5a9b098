//! Histogram computation and global/local threshold selection.

use crate::error::{CoreError, Result};
use crate::imgcore::{BinaryMask, GrayImage};

/// Gray-level frequency vector over `[0, L-1]`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Histogram {
    bins: Vec<u64>,
    total: u64,
}

impl Histogram {
    pub fn from_bins(bins: Vec<u64>) -> Result<Self> {
        if bins.is_empty() {
            return Err(CoreError::InvalidInput("histogram needs at least one bin".into()));
        }
        let total = bins.iter().sum();
        Ok(Self { bins, total })
    }

    pub fn bins(&self) -> &[u64] {
        &self.bins
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    /// Number of gray levels `L`.
    pub fn levels(&self) -> usize {
        self.bins.len()
    }

    pub fn populated_levels(&self) -> usize {
        self.bins.iter().filter(|&&c| c > 0).count()
    }

    fn populated_range(&self) -> Option<(usize, usize)> {
        let lo = self.bins.iter().position(|&c| c > 0)?;
        let hi = self.bins.iter().rposition(|&c| c > 0)?;
        Some((lo, hi))
    }

    pub fn mean(&self) -> f64 {
        let s: f64 = self.bins.iter().enumerate().map(|(r, &c)| r as f64 * c as f64).sum();
        s / self.total as f64
    }

    /// Means of the two classes split at `theta` (class 1: level <= theta).
    /// Returns `None` for an empty class.
    fn class_means(&self, theta: f64) -> (Option<f64>, Option<f64>) {
        let (mut n1, mut s1, mut n2, mut s2) = (0u64, 0f64, 0u64, 0f64);
        for (r, &c) in self.bins.iter().enumerate() {
            if c == 0 {
                continue;
            }
            if r as f64 <= theta {
                n1 += c;
                s1 += r as f64 * c as f64;
            } else {
                n2 += c;
                s2 += r as f64 * c as f64;
            }
        }
        (
            (n1 > 0).then(|| s1 / n1 as f64),
            (n2 > 0).then(|| s2 / n2 as f64),
        )
    }
}

/// Threshold plus the final class means and the iteration count that
/// produced it.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ThresholdResult {
    pub theta_opt: f64,
    pub mu1: f64,
    pub mu2: f64,
    pub iterations: u32,
}

/// Histogram of an image, optionally restricted to a mask's foreground.
pub fn histogram(img: &GrayImage, mask: Option<&BinaryMask>) -> Result<Histogram> {
    if let Some(m) = mask {
        if m.width() != img.width() || m.height() != img.height() {
            return Err(CoreError::DimensionMismatch("image vs mask".into()));
        }
    }
    let mut bins = vec![0u64; img.levels() as usize];
    match mask {
        None => {
            for &v in img.data() {
                bins[v as usize] += 1;
            }
        }
        Some(m) => {
            for (i, &v) in img.data().iter().enumerate() {
                if m.data()[i] == 1 {
                    bins[v as usize] += 1;
                }
            }
        }
    }
    let hist = Histogram::from_bins(bins)?;
    if hist.total == 0 {
        return Err(CoreError::EmptyMask("histogram over empty selection".into()));
    }
    Ok(hist)
}

/// Iterative optimal threshold selection: start from the global mean and
/// repeat `theta <- (mu1 + mu2) / 2` until the step is within `eps_tol` or
/// `max_iter` iterations have run. The histogram is computed once and reused.
pub fn iots(hist: &Histogram, eps_tol: f64, max_iter: u32) -> Result<ThresholdResult> {
    if hist.populated_levels() < 2 {
        return Err(CoreError::Degenerate("iots needs at least two populated levels".into()));
    }
    let (lo, hi) = hist.populated_range().expect("populated levels checked");
    // Keep theta inside the populated range so both classes stay non-empty.
    let clamp = |t: f64| t.clamp(lo as f64, hi as f64 - 1.0);
    let step = |theta: f64| -> (f64, f64, f64) {
        let (m1, m2) = hist.class_means(theta);
        let mu1 = m1.expect("class 1 non-empty inside populated range");
        let mu2 = m2.expect("class 2 non-empty inside populated range");
        (clamp((mu1 + mu2) / 2.0), mu1, mu2)
    };
    let mut theta = clamp(hist.mean());
    let mut iterations = 0;
    loop {
        let (next, _, _) = step(theta);
        iterations += 1;
        // Stop once the update is small AND the candidate is itself a fixed
        // point within tolerance (the update map is a monotone step
        // function, so this terminates; see the fixed-point property test).
        if (next - theta).abs() <= eps_tol {
            let (check, mu1, mu2) = step(next);
            if (check - next).abs() <= eps_tol || iterations >= max_iter {
                return Ok(ThresholdResult { theta_opt: next, mu1, mu2, iterations });
            }
        } else if iterations >= max_iter {
            let (_, mu1, mu2) = step(next);
            return Ok(ThresholdResult { theta_opt: next, mu1, mu2, iterations });
        }
        theta = next;
    }
}

/// Default IOTS tolerance: half a gray level.
pub const IOTS_EPS_TOL: f64 = 0.5;
/// Default IOTS iteration cap.
pub const IOTS_MAX_ITER: u32 = 100;

/// Otsu's method: the threshold maximizing the between-class variance, with
/// the smallest level returned on ties.
///
/// The comparison runs in exact integer arithmetic whenever the counts fit
/// (between-class variance comparisons reduce to comparing
/// `(s1*n2 - s2*n1)^2 / (n1*n2)` across thresholds), falling back to `f64`
/// otherwise.
pub fn otsu(hist: &Histogram) -> Result<ThresholdResult> {
    if hist.populated_levels() < 2 {
        return Err(CoreError::Degenerate("otsu needs at least two populated levels".into()));
    }
    let total: u128 = hist.total as u128;
    let total_sum: u128 = hist.bins.iter().enumerate().map(|(r, &c)| r as u128 * c as u128).sum();

    let mut best_t = 0usize;
    // Best score is a^2 / b; candidates are compared by cross-multiplication.
    let mut best_a2: Option<u128> = None;
    let mut best_b: u128 = 1;

    let mut n1: u128 = 0;
    let mut s1: u128 = 0;
    for t in 0..hist.bins.len() - 1 {
        n1 += hist.bins[t] as u128;
        s1 += t as u128 * hist.bins[t] as u128;
        let n2 = total - n1;
        if n1 == 0 || n2 == 0 {
            continue;
        }
        let s2 = total_sum - s1;
        // a = |s1*n2 - s2*n1|; score = a^2 / (n1*n2).
        let a = (s1 * n2).abs_diff(s2 * n1);
        let b = n1 * n2;
        let a2 = match a.checked_mul(a) {
            Some(v) => v,
            None => return otsu_f64(hist),
        };
        let better = match best_a2 {
            None => true,
            // a2/b > best_a2/best_b  <=>  a2*best_b > best_a2*b
            Some(ba2) => match (a2.checked_mul(best_b), ba2.checked_mul(b)) {
                (Some(l), Some(r)) => l > r,
                _ => return otsu_f64(hist),
            },
        };
        if better {
            best_a2 = Some(a2);
            best_b = b;
            best_t = t;
        }
    }

    finish_otsu(hist, best_t)
}

fn otsu_f64(hist: &Histogram) -> Result<ThresholdResult> {
    let total = hist.total as f64;
    let total_sum: f64 = hist.bins.iter().enumerate().map(|(r, &c)| r as f64 * c as f64).sum();
    let mut best_t = 0usize;
    let mut best = f64::MIN;
    let mut n1 = 0f64;
    let mut s1 = 0f64;
    for t in 0..hist.bins.len() - 1 {
        n1 += hist.bins[t] as f64;
        s1 += t as f64 * hist.bins[t] as f64;
        let n2 = total - n1;
        if n1 == 0.0 || n2 == 0.0 {
            continue;
        }
        let mu1 = s1 / n1;
        let mu2 = (total_sum - s1) / n2;
        let score = n1 * n2 * (mu1 - mu2) * (mu1 - mu2);
        if score > best {
            best = score;
            best_t = t;
        }
    }
    finish_otsu(hist, best_t)
}

fn finish_otsu(hist: &Histogram, t: usize) -> Result<ThresholdResult> {
    let (m1, m2) = hist.class_means(t as f64);
    Ok(ThresholdResult {
        theta_opt: t as f64,
        mu1: m1.expect("non-empty class"),
        mu2: m2.expect("non-empty class"),
        iterations: 1,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Polarity {
    /// Foreground = strictly above the threshold.
    Above,
    /// Foreground = at or below the threshold (local variant: strictly below).
    Below,
}

/// Global binarization: `Above` selects `I > theta`, `Below` selects
/// `I <= theta`, so the two polarities partition the image.
pub fn binarize(img: &GrayImage, theta: f64, polarity: Polarity) -> BinaryMask {
    let data = img
        .data()
        .iter()
        .map(|&v| {
            let above = (v as f64) > theta;
            match polarity {
                Polarity::Above => above as u8,
                Polarity::Below => !above as u8,
            }
        })
        .collect();
    BinaryMask::new(img.width(), img.height(), data).expect("same dims")
}

/// Window dimensions used by [`local_adaptive_threshold`]:
/// `(2*floor(w/16) + 1, 2*floor(h/16) + 1)`, clamped to at least 3x3.
pub fn adaptive_window(width: u32, height: u32) -> (u32, u32) {
    let wx = (2 * (width / 16) + 1).max(3);
    let wy = (2 * (height / 16) + 1).max(3);
    (wx, wy)
}

/// Local mean thresholding: a pixel is foreground iff it is strictly above
/// (or strictly below) the mean of its window. Windows are clipped at the
/// image borders.
pub fn local_adaptive_threshold(img: &GrayImage, polarity: Polarity) -> BinaryMask {
    let (wx, wy) = adaptive_window(img.width(), img.height());
    local_adaptive_threshold_with_window(img, polarity, wx, wy)
}

pub fn local_adaptive_threshold_with_window(
    img: &GrayImage,
    polarity: Polarity,
    window_w: u32,
    window_h: u32,
) -> BinaryMask {
    let w = img.width() as usize;
    let h = img.height() as usize;
    let rx = (window_w / 2) as i64;
    let ry = (window_h / 2) as i64;
    // Summed-area table for O(1) window means.
    let mut sat = vec![0u64; (w + 1) * (h + 1)];
    for y in 0..h {
        let mut row = 0u64;
        for x in 0..w {
            row += img.data()[y * w + x] as u64;
            sat[(y + 1) * (w + 1) + (x + 1)] = sat[y * (w + 1) + (x + 1)] + row;
        }
    }
    let mut out = BinaryMask::zeros(img.width(), img.height());
    for y in 0..h as i64 {
        for x in 0..w as i64 {
            let x0 = (x - rx).max(0) as usize;
            let y0 = (y - ry).max(0) as usize;
            let x1 = ((x + rx) as usize).min(w - 1);
            let y1 = ((y + ry) as usize).min(h - 1);
            let sum = sat[(y1 + 1) * (w + 1) + (x1 + 1)] + sat[y0 * (w + 1) + x0]
                - sat[y0 * (w + 1) + (x1 + 1)]
                - sat[(y1 + 1) * (w + 1) + x0];
            let count = ((x1 - x0 + 1) * (y1 - y0 + 1)) as u64;
            let v = img.data()[y as usize * w + x as usize] as u64;
            // Strict comparisons: v*count <> sum avoids any float rounding.
            let fg = match polarity {
                Polarity::Above => v * count > sum,
                Polarity::Below => v * count < sum,
            };
            out.set(x as u32, y as u32, fg);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn img8(w: u32, h: u32, data: Vec<u16>) -> GrayImage {
        GrayImage::new(w, h, 8, data).unwrap()
    }

    #[test]
    fn histogram_counts() {
        let img = img8(2, 2, vec![0, 0, 1, 1]);
        let h = histogram(&img, None).unwrap();
        assert_eq!(h.bins()[0], 2);
        assert_eq!(h.bins()[1], 2);
        assert_eq!(h.total(), 4);
    }

    #[test]
    fn histogram_constant_single_bin() {
        let img = img8(3, 3, vec![5; 9]);
        let h = histogram(&img, None).unwrap();
        assert_eq!(h.populated_levels(), 1);
        assert_eq!(h.bins()[5], 9);
    }

    #[test]
    fn histogram_respects_mask() {
        let img = img8(2, 2, vec![1, 2, 3, 4]);
        let mut m = BinaryMask::zeros(2, 2);
        m.set(0, 0, true);
        m.set(1, 0, true);
        let h = histogram(&img, Some(&m)).unwrap();
        assert_eq!(h.total(), 2);
        assert!(histogram(&img, Some(&BinaryMask::zeros(2, 2))).is_err());
    }

    #[test]
    fn iots_symmetric_deltas() {
        let mut bins = vec![0u64; 32];
        bins[10] = 5;
        bins[20] = 5;
        let h = Histogram::from_bins(bins).unwrap();
        let r = iots(&h, 0.5, 100).unwrap();
        assert_relative_eq!(r.theta_opt, 15.0);
        assert_relative_eq!(r.mu1, 10.0);
        assert_relative_eq!(r.mu2, 20.0);
    }

    #[test]
    fn iots_asymmetric_mass_hand_trace() {
        // Deltas at 10 (mass 3) and 20 (mass 1): global mean 12.5 splits the
        // classes as {10} and {20}, so theta converges to 15 in one step.
        let mut bins = vec![0u64; 32];
        bins[10] = 3;
        bins[20] = 1;
        let h = Histogram::from_bins(bins).unwrap();
        let r = iots(&h, 0.5, 100).unwrap();
        assert_relative_eq!(r.theta_opt, 15.0);
        assert_relative_eq!(r.mu1, 10.0);
        assert_relative_eq!(r.mu2, 20.0);
    }

    #[test]
    fn iots_single_level_errors() {
        let mut bins = vec![0u64; 8];
        bins[3] = 10;
        assert!(iots(&Histogram::from_bins(bins).unwrap(), 0.5, 100).is_err());
    }

    /// Independent fixed-point oracle used by the bimodal test: literal
    /// re-implementation of the update rule without the production clamping.
    fn iots_oracle(bins: &[u64], eps: f64) -> f64 {
        let total: f64 = bins.iter().map(|&c| c as f64).sum();
        let mean: f64 = bins.iter().enumerate().map(|(r, &c)| r as f64 * c as f64).sum::<f64>() / total;
        let mut theta = mean;
        for _ in 0..1000 {
            let (mut n1, mut s1, mut n2, mut s2) = (0.0, 0.0, 0.0, 0.0);
            for (r, &c) in bins.iter().enumerate() {
                if r as f64 <= theta {
                    n1 += c as f64;
                    s1 += (r * c as usize) as f64;
                } else {
                    n2 += c as f64;
                    s2 += (r * c as usize) as f64;
                }
            }
            if n1 == 0.0 || n2 == 0.0 {
                break;
            }
            let next = (s1 / n1 + s2 / n2) / 2.0;
            if (next - theta).abs() <= eps {
                return next;
            }
            theta = next;
        }
        theta
    }

    #[test]
    fn iots_bimodal_matches_reference_iteration() {
        // Discrete Gaussians N(50, 5^2) and N(150, 10^2), 10^4 samples each,
        // built deterministically from the density.
        let mut bins = vec![0u64; 256];
        for r in 0..256usize {
            let g1 = (-0.5 * ((r as f64 - 50.0) / 5.0).powi(2)).exp() / 5.0;
            let g2 = (-0.5 * ((r as f64 - 150.0) / 10.0).powi(2)).exp() / 10.0;
            bins[r] = ((g1 + g2) * 10_000.0 / (2.0 * std::f64::consts::PI).sqrt()).round() as u64;
        }
        let h = Histogram::from_bins(bins.clone()).unwrap();
        let r = iots(&h, 0.5, 100).unwrap();
        let oracle = iots_oracle(&bins, 0.5);
        assert!((r.theta_opt - oracle).abs() <= 1.0, "{} vs {}", r.theta_opt, oracle);
        // Fixed-point condition.
        let (m1, m2) = h.class_means(r.theta_opt);
        let midpoint = (m1.unwrap() + m2.unwrap()) / 2.0;
        assert!((r.theta_opt - midpoint).abs() <= 0.5);
    }

    #[test]
    fn otsu_tie_breaks_to_smallest() {
        let mut bins = vec![0u64; 32];
        bins[10] = 7;
        bins[20] = 7;
        let r = otsu(&Histogram::from_bins(bins).unwrap()).unwrap();
        assert_eq!(r.theta_opt, 10.0);
    }

    #[test]
    fn otsu_uniform_histogram() {
        let bins = vec![4u64; 256];
        let r = otsu(&Histogram::from_bins(bins.clone()).unwrap()).unwrap();
        // Exhaustive variance scan oracle: symmetric argmax pair {127, 128},
        // smallest returned.
        assert_eq!(r.theta_opt, 127.0);
    }

    #[test]
    fn otsu_single_level_errors() {
        let mut bins = vec![0u64; 4];
        bins[2] = 5;
        assert!(otsu(&Histogram::from_bins(bins).unwrap()).is_err());
    }

    #[test]
    fn binarize_edges() {
        let img = img8(4, 1, vec![0, 3, 200, 255]);
        assert!(binarize(&img, 255.0, Polarity::Above).is_all_zero());
        assert_eq!(binarize(&img, -1.0, Polarity::Above).area(), 4);
        let ramp: Vec<u16> = (0..=255).collect();
        let rimg = img8(16, 16, ramp);
        assert_eq!(binarize(&rimg, 127.0, Polarity::Above).area(), 128);
    }

    #[test]
    fn adaptive_window_formula() {
        assert_eq!(adaptive_window(32, 32), (5, 5));
        assert_eq!(adaptive_window(16, 16), (3, 3));
        assert_eq!(adaptive_window(8, 8), (3, 3)); // clamped minimum
        assert_eq!(adaptive_window(160, 48), (21, 7));
    }

    #[test]
    fn local_threshold_constant_is_empty() {
        let img = img8(20, 20, vec![9; 400]);
        assert!(local_adaptive_threshold(&img, Polarity::Above).is_all_zero());
        assert!(local_adaptive_threshold(&img, Polarity::Below).is_all_zero());
    }

    #[test]
    fn local_threshold_matches_window_mean_oracle() {
        // White disk on black: compare against a direct sliding-window mean.
        let mut img = GrayImage::zeros(32, 32, 8);
        for (dx, dy) in crate::imgcore::StructuringElement::disk(6).offsets() {
            img.set((15 + dx) as u32, (15 + dy) as u32, 200);
        }
        let out = local_adaptive_threshold(&img, Polarity::Above);
        let (wx, wy) = adaptive_window(32, 32);
        let (rx, ry) = ((wx / 2) as i32, (wy / 2) as i32);
        for y in 0..32i32 {
            for x in 0..32i32 {
                let mut sum = 0u64;
                let mut cnt = 0u64;
                for dy in -ry..=ry {
                    for dx in -rx..=rx {
                        let sx = x + dx;
                        let sy = y + dy;
                        if sx < 0 || sy < 0 || sx >= 32 || sy >= 32 {
                            continue;
                        }
                        sum += img.get(sx as u32, sy as u32) as u64;
                        cnt += 1;
                    }
                }
                let expect = (img.get(x as u32, y as u32) as f64) > (sum as f64 / cnt as f64);
                assert_eq!(out.get(x as u32, y as u32), expect, "({x},{y})");
            }
        }
    }

    proptest! {
        #[test]
        fn iots_fixed_point_and_scale_invariance(
            raw in proptest::collection::vec(0u64..50, 16),
            k in 1u64..5,
        ) {
            let h = match Histogram::from_bins(raw.clone()) {
                Ok(h) if h.populated_levels() >= 2 => h,
                _ => return Ok(()),
            };
            let r = iots(&h, 0.5, 100).unwrap();
            let (m1, m2) = h.class_means(r.theta_opt);
            let mid = (m1.unwrap() + m2.unwrap()) / 2.0;
            prop_assert!((r.theta_opt - mid).abs() <= 0.5 + 1e-12);
            prop_assert!(r.mu1 <= r.theta_opt + 1e-12);
            prop_assert!(r.theta_opt <= r.mu2 + 1e-12);
            // Scaling all frequencies leaves theta unchanged.
            let scaled = Histogram::from_bins(raw.iter().map(|&c| c * k).collect()).unwrap();
            let rs = iots(&scaled, 0.5, 100).unwrap();
            prop_assert!((r.theta_opt - rs.theta_opt).abs() < 1e-9);
        }

        #[test]
        fn otsu_equals_exhaustive_scan(raw in proptest::collection::vec(0u64..100, 2..64)) {
            let h = match Histogram::from_bins(raw.clone()) {
                Ok(h) if h.populated_levels() >= 2 => h,
                _ => return Ok(()),
            };
            let r = otsu(&h).unwrap();
            // Brute-force oracle over all thresholds using the textbook
            // omega1*omega2*(mu1-mu2)^2 form.
            let total: f64 = raw.iter().map(|&c| c as f64).sum();
            let mut best = f64::MIN;
            let mut best_t = 0usize;
            for t in 0..raw.len() - 1 {
                let n1: f64 = raw[..=t].iter().map(|&c| c as f64).sum();
                let n2 = total - n1;
                if n1 == 0.0 || n2 == 0.0 {
                    continue;
                }
                let mu1: f64 = raw[..=t].iter().enumerate().map(|(r, &c)| (r * c as usize) as f64).sum::<f64>() / n1;
                let mu2: f64 = raw[t + 1..].iter().enumerate().map(|(r, &c)| ((r + t + 1) * c as usize) as f64).sum::<f64>() / n2;
                let w1 = n1 / total;
                let w2 = n2 / total;
                let score = w1 * w2 * (mu1 - mu2) * (mu1 - mu2);
                if score > best + 1e-12 {
                    best = score;
                    best_t = t;
                }
            }
            prop_assert_eq!(r.theta_opt, best_t as f64);
        }

        #[test]
        fn binarize_partition(data in proptest::collection::vec(0u16..256, 16), theta in -1.0f64..256.0) {
            let img = img8(4, 4, data);
            let above = binarize(&img, theta, Polarity::Above);
            let below = binarize(&img, theta, Polarity::Below);
            prop_assert_eq!(above.or(&below).unwrap().area(), 16);
            prop_assert!(above.and(&below).unwrap().is_all_zero());
        }

        #[test]
        fn local_threshold_shift_invariant(data in proptest::collection::vec(0u16..100, 64), c in 1u16..50) {
            let img = img8(8, 8, data.clone());
            let shifted = img8(8, 8, data.iter().map(|&v| v + c).collect());
            prop_assert_eq!(
                local_adaptive_threshold(&img, Polarity::Above),
                local_adaptive_threshold(&shifted, Polarity::Above)
            );
        }
    }
}

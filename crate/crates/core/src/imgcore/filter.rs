//! Intensity filters: contrast stretching, stick filter, bilateral filter,
//! gray-scale morphology and the white top-hat.

use super::image::{GrayImage, StructuringElement};
use crate::error::{CoreError, Result};

/// Linearly rescale intensities so the observed minimum maps to `out_lo` and
/// the maximum to `out_hi`. A constant image is returned unchanged.
pub fn contrast_stretch(img: &GrayImage, out_lo: u16, out_hi: u16) -> Result<GrayImage> {
    if out_lo >= out_hi {
        return Err(CoreError::InvalidParameter(format!("output range [{out_lo}, {out_hi}] is empty")));
    }
    if out_hi > img.max_value() {
        return Err(CoreError::InvalidParameter("output bound exceeds image depth".into()));
    }
    let (lo, hi) = img.min_max();
    if lo == hi {
        return Ok(img.clone());
    }
    let scale = (out_hi - out_lo) as f64 / (hi - lo) as f64;
    let data = img
        .data()
        .iter()
        .map(|&v| (out_lo as f64 + (v - lo) as f64 * scale).round() as u16)
        .collect();
    GrayImage::new(img.width(), img.height(), img.depth(), data)
}

/// Stretch only the pixels selected by `mask`, leaving the rest at zero.
pub fn contrast_stretch_masked(
    img: &GrayImage,
    mask: &super::image::BinaryMask,
    out_lo: u16,
    out_hi: u16,
) -> Result<GrayImage> {
    if out_lo >= out_hi {
        return Err(CoreError::InvalidParameter("output range is empty".into()));
    }
    if img.width() != mask.width() || img.height() != mask.height() {
        return Err(CoreError::DimensionMismatch("image vs mask".into()));
    }
    let mut lo = u16::MAX;
    let mut hi = 0u16;
    for (i, &v) in img.data().iter().enumerate() {
        if mask.data()[i] == 1 {
            lo = lo.min(v);
            hi = hi.max(v);
        }
    }
    if lo > hi {
        return Err(CoreError::EmptyMask("contrast_stretch_masked".into()));
    }
    let mut out = GrayImage::zeros(img.width(), img.height(), img.depth());
    for (i, &v) in img.data().iter().enumerate() {
        if mask.data()[i] == 1 {
            let s = if lo == hi {
                v
            } else {
                (out_lo as f64 + (v - lo) as f64 * (out_hi - out_lo) as f64 / (hi - lo) as f64).round() as u16
            };
            out.data_mut()[i] = s;
        }
    }
    Ok(out)
}

/// Offsets of the `2*length - 2` digital sticks through the center of a
/// `length x length` window. Each stick holds `length` pixel offsets.
fn stick_offsets(length: u32) -> Vec<Vec<(i32, i32)>> {
    let n = length as i32;
    let r = (n - 1) / 2;
    let mut sticks = Vec::new();
    // Family 1: from (0, k) to (n-1, n-1-k); passes through the center.
    for k in 0..n {
        let mut stick = Vec::with_capacity(length as usize);
        for t in 0..n {
            let y = k as f64 + t as f64 * (n - 1 - 2 * k) as f64 / (n - 1) as f64;
            stick.push((t - r, y.round() as i32 - r));
        }
        sticks.push(stick);
    }
    // Family 2: transpose. Skip k = 0 and k = n-1 (diagonals already present).
    for k in 1..n - 1 {
        let mut stick = Vec::with_capacity(length as usize);
        for t in 0..n {
            let x = k as f64 + t as f64 * (n - 1 - 2 * k) as f64 / (n - 1) as f64;
            stick.push((x.round() as i32 - r, t - r));
        }
        sticks.push(stick);
    }
    sticks
}

/// Speckle-reducing stick filter: each pixel becomes the maximum over the
/// mean projections along all `2*length - 2` stick orientations.
///
/// For `thickness > 1` each stick is the average of `thickness` parallel
/// lines offset along its minor axis.
pub fn stick_filter(img: &GrayImage, length: u32, thickness: u32) -> Result<GrayImage> {
    if length < 3 || length % 2 == 0 {
        return Err(CoreError::InvalidParameter(format!("stick length must be odd and >= 3, got {length}")));
    }
    if thickness == 0 || thickness >= length {
        return Err(CoreError::InvalidParameter(format!(
            "stick thickness must be in [1, length), got {thickness}"
        )));
    }
    let base = stick_offsets(length);
    // Thicken by replicating each stick at perpendicular offsets.
    let mut sticks: Vec<Vec<(i32, i32)>> = Vec::with_capacity(base.len());
    let half_t = (thickness as i32 - 1) / 2;
    for stick in &base {
        let (dx0, dy0) = stick[0];
        let (dx1, dy1) = stick[stick.len() - 1];
        let horizontal_major = (dx1 - dx0).abs() >= (dy1 - dy0).abs();
        let mut fat = Vec::new();
        for off in -half_t..=(thickness as i32 - 1 - half_t) {
            for &(dx, dy) in stick {
                if horizontal_major {
                    fat.push((dx, dy + off));
                } else {
                    fat.push((dx + off, dy));
                }
            }
        }
        sticks.push(fat);
    }

    let (w, h) = (img.width() as i32, img.height() as i32);
    let mut out = GrayImage::zeros(img.width(), img.height(), img.depth());
    for y in 0..h {
        for x in 0..w {
            let mut best = f64::MIN;
            for stick in &sticks {
                let mut sum = 0.0;
                for &(dx, dy) in stick {
                    // Replicate-edge padding.
                    let sx = (x + dx).clamp(0, w - 1) as u32;
                    let sy = (y + dy).clamp(0, h - 1) as u32;
                    sum += img.get(sx, sy) as f64;
                }
                let mean = sum / stick.len() as f64;
                if mean > best {
                    best = mean;
                }
            }
            out.set(x as u32, y as u32, best.round() as u16);
        }
    }
    Ok(out)
}

/// Edge-preserving bilateral filter: Gaussian closeness times Gaussian
/// intensity similarity, normalized per window.
///
/// `window = 0` selects the default `max(5, 2*ceil(3*sigma_spatial) + 1)`.
pub fn bilateral_filter(
    img: &GrayImage,
    sigma_spatial: f64,
    sigma_range: f64,
    window: u32,
) -> Result<GrayImage> {
    if sigma_spatial <= 0.0 || sigma_range <= 0.0 {
        return Err(CoreError::InvalidParameter("bilateral sigmas must be positive".into()));
    }
    let window = if window == 0 { bilateral_default_window(sigma_spatial) } else { window };
    if window % 2 == 0 {
        return Err(CoreError::InvalidParameter("bilateral window must be odd".into()));
    }
    let r = (window / 2) as i32;
    // Spatial kernel is fixed; precompute it.
    let mut spatial = vec![0.0f64; (window * window) as usize];
    for dy in -r..=r {
        for dx in -r..=r {
            let d2 = (dx * dx + dy * dy) as f64;
            spatial[((dy + r) * window as i32 + dx + r) as usize] =
                (-0.5 * d2 / (sigma_spatial * sigma_spatial)).exp();
        }
    }
    let inv_2sr2 = 0.5 / (sigma_range * sigma_range);
    let (w, h) = (img.width() as i32, img.height() as i32);
    let mut out = GrayImage::zeros(img.width(), img.height(), img.depth());
    for y in 0..h {
        for x in 0..w {
            let center = img.get(x as u32, y as u32) as f64;
            let mut num = 0.0;
            let mut den = 0.0;
            for dy in -r..=r {
                for dx in -r..=r {
                    let sx = (x + dx).clamp(0, w - 1) as u32;
                    let sy = (y + dy).clamp(0, h - 1) as u32;
                    let v = img.get(sx, sy) as f64;
                    let dv = v - center;
                    let wgt = spatial[((dy + r) * window as i32 + dx + r) as usize]
                        * (-dv * dv * inv_2sr2).exp();
                    num += wgt * v;
                    den += wgt;
                }
            }
            out.set(x as u32, y as u32, (num / den).round() as u16);
        }
    }
    Ok(out)
}

/// Default bilateral window size: `max(5, 2*ceil(3*sigma) + 1)`.
pub fn bilateral_default_window(sigma_spatial: f64) -> u32 {
    5u32.max(2 * (3.0 * sigma_spatial).ceil() as u32 + 1)
}

/// Gray-scale erosion (running minimum over the footprint, clipped at
/// borders). Uses the footprint's row-run decomposition so large disks stay
/// cheap.
pub fn gray_erode(img: &GrayImage, se: &StructuringElement) -> GrayImage {
    gray_min_max(img, se, true)
}

/// Gray-scale dilation (running maximum over the footprint).
pub fn gray_dilate(img: &GrayImage, se: &StructuringElement) -> GrayImage {
    gray_min_max(img, se, false)
}

fn gray_min_max(img: &GrayImage, se: &StructuringElement, is_min: bool) -> GrayImage {
    let w = img.width() as usize;
    let h = img.height() as usize;
    let runs = se.row_runs();
    // Group rows by identical half-width so each horizontal filter runs once.
    let mut by_half: Vec<(i32, Vec<i32>)> = Vec::new();
    for &(dy, lo, hi) in &runs {
        debug_assert_eq!(-lo, hi);
        match by_half.iter_mut().find(|(half, _)| *half == hi) {
            Some((_, dys)) => dys.push(dy),
            None => by_half.push((hi, vec![dy])),
        }
    }
    let ext = if is_min { u16::MAX } else { 0u16 };
    let better = |a: u16, b: u16| if is_min { a.min(b) } else { a.max(b) };

    // Horizontal pass per distinct half-width, sliding min/max via a
    // monotonic deque so wide footprints stay O(1) per pixel.
    let mut horiz: Vec<Vec<u16>> = Vec::with_capacity(by_half.len());
    for (half, _) in &by_half {
        let k = *half as usize;
        let mut filt = vec![ext; w * h];
        let mut deque: std::collections::VecDeque<usize> = std::collections::VecDeque::new();
        for y in 0..h {
            let row = &img.data()[y * w..(y + 1) * w];
            let out = &mut filt[y * w..(y + 1) * w];
            if k == 0 {
                out.copy_from_slice(row);
                continue;
            }
            deque.clear();
            for x in 0..w + k {
                if x < w {
                    while let Some(&back) = deque.back() {
                        if better(row[back], row[x]) == row[x] {
                            deque.pop_back();
                        } else {
                            break;
                        }
                    }
                    deque.push_back(x);
                }
                // Window for output position x-k is [x-2k, x] clamped.
                if x >= k {
                    let pos = x - k;
                    while *deque.front().expect("nonempty window") + 2 * k < x {
                        deque.pop_front();
                    }
                    out[pos] = row[*deque.front().expect("nonempty window")];
                }
            }
        }
        horiz.push(filt);
    }

    // Vertical combine.
    let mut out = GrayImage::zeros(img.width(), img.height(), img.depth());
    for y in 0..h as i32 {
        for x in 0..w {
            let mut v = ext;
            for ((_, dy_list), raster) in by_half.iter().zip(&horiz) {
                for &dy in dy_list {
                    let sy = y + dy;
                    if sy < 0 || sy >= h as i32 {
                        continue; // footprint clipped at image borders
                    }
                    v = better(v, raster[sy as usize * w + x]);
                }
            }
            out.set(x as u32, y as u32, v);
        }
    }
    out
}

/// Gray-scale opening: erosion then dilation.
pub fn gray_open(img: &GrayImage, se: &StructuringElement) -> GrayImage {
    gray_dilate(&gray_erode(img, se), se)
}

/// White top-hat: input minus its gray opening, clamped at zero.
pub fn white_tophat(img: &GrayImage, se: &StructuringElement) -> GrayImage {
    let opened = gray_open(img, se);
    let data = img
        .data()
        .iter()
        .zip(opened.data())
        .map(|(&a, &b)| a.saturating_sub(b))
        .collect();
    GrayImage::new(img.width(), img.height(), img.depth(), data).expect("same dims")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::imgcore::BinaryMask;

    fn img8(w: u32, h: u32, data: Vec<u16>) -> GrayImage {
        GrayImage::new(w, h, 8, data).unwrap()
    }

    #[test]
    fn stretch_constant_is_identity() {
        let img = img8(3, 1, vec![7, 7, 7]);
        assert_eq!(contrast_stretch(&img, 0, 255).unwrap(), img);
    }

    #[test]
    fn stretch_identity_case() {
        let img = img8(3, 1, vec![0, 128, 255]);
        assert_eq!(contrast_stretch(&img, 0, 255).unwrap().data(), &[0, 128, 255]);
    }

    #[test]
    fn stretch_forces_endpoints() {
        let img = img8(2, 1, vec![10, 20]);
        assert_eq!(contrast_stretch(&img, 0, 100).unwrap().data(), &[0, 100]);
    }

    #[test]
    fn stretch_rejects_bad_range() {
        let img = img8(2, 1, vec![1, 2]);
        assert!(contrast_stretch(&img, 5, 5).is_err());
    }

    #[test]
    fn stick_count_and_length() {
        let sticks = stick_offsets(5);
        assert_eq!(sticks.len(), 8);
        for s in &sticks {
            assert_eq!(s.len(), 5);
            assert!(s.contains(&(0, 0)), "stick must pass through the center");
        }
        // All sticks distinct.
        for i in 0..sticks.len() {
            for j in i + 1..sticks.len() {
                let mut a = sticks[i].clone();
                let mut b = sticks[j].clone();
                a.sort_unstable();
                b.sort_unstable();
                assert_ne!(a, b);
            }
        }
    }

    #[test]
    fn stick_filter_constant_unchanged() {
        let img = img8(9, 9, vec![42; 81]);
        assert_eq!(stick_filter(&img, 5, 1).unwrap(), img);
    }

    #[test]
    fn stick_filter_single_peak_is_fifth() {
        // Single bright pixel on zero background: every stick through the
        // center covers the peak exactly once, so the best projection mean
        // is peak/length.
        let mut img = GrayImage::zeros(11, 11, 8);
        img.set(5, 5, 200);
        let out = stick_filter(&img, 5, 1).unwrap();
        assert_eq!(out.get(5, 5), 40); // 200 / 5
    }

    #[test]
    fn stick_filter_preserves_step_edge() {
        // Vertical step: columns 0..5 dark, 5..10 bright. Sticks aligned with
        // the edge keep each side pure, so the step column stays sharp.
        let mut data = Vec::new();
        for _y in 0..10 {
            for x in 0..10 {
                data.push(if x < 5 { 10u16 } else { 200 });
            }
        }
        let img = img8(10, 10, data);
        let out = stick_filter(&img, 5, 1).unwrap();
        // Brute-force oracle at two probe pixels bracketing the edge.
        let oracle = |x: i32, y: i32| -> u16 {
            let sticks = stick_offsets(5);
            let mut best = f64::MIN;
            for s in &sticks {
                let m: f64 = s
                    .iter()
                    .map(|&(dx, dy)| {
                        let sx = (x + dx).clamp(0, 9) as u32;
                        let sy = (y + dy).clamp(0, 9) as u32;
                        img.get(sx, sy) as f64
                    })
                    .sum::<f64>()
                    / 5.0;
                best = best.max(m);
            }
            best.round() as u16
        };
        for y in 2..8 {
            for x in [4u32, 5] {
                assert_eq!(out.get(x, y), oracle(x as i32, y as i32));
            }
        }
        // Edge is not blurred across: dark side of the edge keeps a stick
        // fully inside the dark region only where one exists; the bright side
        // stays at the bright level (max over projections).
        assert_eq!(out.get(5, 5), 200);
    }

    #[test]
    fn bilateral_constant_unchanged() {
        let img = img8(7, 7, vec![99; 49]);
        let out = bilateral_filter(&img, 1.0, 10.0, 5).unwrap();
        assert_eq!(out, img);
    }

    #[test]
    fn bilateral_large_range_sigma_is_gaussian_blur() {
        // sigma_range -> infinity: similarity weights become 1, leaving a
        // plain Gaussian convolution. Compare against a direct oracle.
        let mut img = GrayImage::zeros(9, 9, 8);
        for y in 0..9 {
            for x in 0..9 {
                img.set(x, y, ((x * 17 + y * 29) % 200) as u16);
            }
        }
        let sigma = 1.2;
        let out = bilateral_filter(&img, sigma, 1e9, 7).unwrap();
        let r = 3i32;
        for y in 0..9i32 {
            for x in 0..9i32 {
                let mut num = 0.0;
                let mut den = 0.0;
                for dy in -r..=r {
                    for dx in -r..=r {
                        let sx = (x + dx).clamp(0, 8) as u32;
                        let sy = (y + dy).clamp(0, 8) as u32;
                        let wgt = (-0.5 * ((dx * dx + dy * dy) as f64) / (sigma * sigma)).exp();
                        num += wgt * img.get(sx, sy) as f64;
                        den += wgt;
                    }
                }
                let expect = num / den;
                let got = out.get(x as u32, y as u32) as f64;
                assert!((got - expect).abs() <= 1.0, "({x},{y}): {got} vs {expect}");
            }
        }
    }

    #[test]
    fn bilateral_small_range_sigma_preserves_step() {
        let mut data = Vec::new();
        for _y in 0..8 {
            for x in 0..8 {
                data.push(if x < 4 { 20u16 } else { 220 });
            }
        }
        let img = img8(8, 8, data);
        let out = bilateral_filter(&img, 2.0, 2.0, 7).unwrap();
        for y in 0..8 {
            assert!((out.get(3, y) as i32 - 20).abs() <= 1);
            assert!((out.get(4, y) as i32 - 220).abs() <= 1);
        }
    }

    #[test]
    fn bilateral_rejects_nonpositive_sigma() {
        let img = img8(2, 2, vec![0; 4]);
        assert!(bilateral_filter(&img, 0.0, 1.0, 5).is_err());
        assert!(bilateral_filter(&img, 1.0, -1.0, 5).is_err());
    }

    #[test]
    fn default_window_formula() {
        assert_eq!(bilateral_default_window(1.0), 7);
        assert_eq!(bilateral_default_window(0.3), 5);
    }

    #[test]
    fn tophat_constant_is_zero() {
        let img = img8(6, 6, vec![120; 36]);
        let out = white_tophat(&img, &StructuringElement::disk(2));
        assert!(out.data().iter().all(|&v| v == 0));
    }

    #[test]
    fn tophat_keeps_small_bright_disk() {
        // Bright disk of radius 1 on dark background, SE disk radius 3:
        // the opening removes the peak, so the top-hat retains it.
        let mut img = GrayImage::zeros(11, 11, 8);
        for &(dx, dy) in StructuringElement::disk(1).offsets().iter() {
            img.set((5 + dx) as u32, (5 + dy) as u32, 180);
        }
        let out = white_tophat(&img, &StructuringElement::disk(3));
        assert_eq!(out.get(5, 5), 180);
        assert_eq!(out.get(0, 0), 0);
    }

    #[test]
    fn tophat_flattens_wide_ramp() {
        // Smooth horizontal ramp much wider than the SE: opening tracks the
        // ramp except near the rising border, so the top-hat is ~0 inside.
        let mut data = Vec::new();
        for _y in 0..8 {
            for x in 0..32 {
                data.push((x * 4) as u16);
            }
        }
        let img = img8(32, 8, data);
        let out = white_tophat(&img, &StructuringElement::square(2));
        for y in 0..8 {
            for x in 4..28 {
                assert!(out.get(x, y) <= 8, "ramp residue at ({x},{y}) = {}", out.get(x, y));
            }
        }
    }

    #[test]
    fn gray_morph_matches_naive_footprint_scan() {
        let mut img = GrayImage::zeros(13, 9, 8);
        for y in 0..9 {
            for x in 0..13 {
                img.set(x, y, ((x * 31 + y * 7 + (x * y) % 5) % 250) as u16);
            }
        }
        for se in [StructuringElement::disk(3), StructuringElement::diamond(2), StructuringElement::square(1)] {
            let fast_e = gray_erode(&img, &se);
            let fast_d = gray_dilate(&img, &se);
            for y in 0..9i32 {
                for x in 0..13i32 {
                    let mut mn = u16::MAX;
                    let mut mx = 0;
                    for (dx, dy) in se.offsets() {
                        let sx = x + dx;
                        let sy = y + dy;
                        if sx < 0 || sy < 0 || sx >= 13 || sy >= 9 {
                            continue;
                        }
                        let v = img.get(sx as u32, sy as u32);
                        mn = mn.min(v);
                        mx = mx.max(v);
                    }
                    assert_eq!(fast_e.get(x as u32, y as u32), mn);
                    assert_eq!(fast_d.get(x as u32, y as u32), mx);
                }
            }
        }
    }

    #[test]
    fn masked_stretch_ignores_background() {
        let img = img8(2, 2, vec![50, 100, 0, 200]);
        let mut mask = BinaryMask::zeros(2, 2);
        mask.set(0, 0, true);
        mask.set(1, 0, true);
        let out = contrast_stretch_masked(&img, &mask, 1, 255).unwrap();
        assert_eq!(out.get(0, 0), 1);
        assert_eq!(out.get(1, 0), 255);
        assert_eq!(out.get(0, 1), 0);
        assert_eq!(out.get(1, 1), 0);
    }
}

//! Distance transforms: per-pixel distance to the nearest background pixel.

use super::image::BinaryMask;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EdtMode {
    /// Exact Euclidean distances via the two-pass parabola method.
    Exact,
    /// Two-pass chamfer with a 5x5 mask (local steps 1, sqrt(2), sqrt(5)).
    Chamfer5,
}

/// Distance of every pixel to the nearest background pixel (0 on background).
/// Distances are measured between pixel centers.
pub fn distance_transform(mask: &BinaryMask, mode: EdtMode) -> Vec<f64> {
    match mode {
        EdtMode::Exact => exact_edt(mask),
        EdtMode::Chamfer5 => chamfer5(mask),
    }
}

const INF: f64 = 1e20;

/// 1D squared-distance transform of a sampled function (Felzenszwalb &
/// Huttenlocher lower envelope of parabolas).
fn dt_1d(f: &[f64], out: &mut [f64]) {
    let n = f.len();
    let mut v = vec![0usize; n]; // locations of parabolas in the envelope
    let mut z = vec![0.0f64; n + 1]; // boundaries between parabolas
    let mut k = 0usize;
    z[0] = -INF;
    z[1] = INF;
    for q in 1..n {
        loop {
            let s = ((f[q] + (q * q) as f64) - (f[v[k]] + (v[k] * v[k]) as f64))
                / (2.0 * q as f64 - 2.0 * v[k] as f64);
            if s <= z[k] {
                k -= 1;
            } else {
                k += 1;
                v[k] = q;
                z[k] = s;
                z[k + 1] = INF;
                break;
            }
        }
    }
    let mut k = 0usize;
    for q in 0..n {
        while z[k + 1] < q as f64 {
            k += 1;
        }
        let d = q as f64 - v[k] as f64;
        out[q] = d * d + f[v[k]];
    }
}

fn exact_edt(mask: &BinaryMask) -> Vec<f64> {
    let w = mask.width() as usize;
    let h = mask.height() as usize;
    // Squared distances, seeded with 0 at background pixels.
    let mut d: Vec<f64> = mask.data().iter().map(|&v| if v == 0 { 0.0 } else { INF }).collect();
    // Columns.
    let mut col = vec![0.0f64; h];
    let mut out_col = vec![0.0f64; h];
    for x in 0..w {
        for y in 0..h {
            col[y] = d[y * w + x];
        }
        dt_1d(&col, &mut out_col);
        for y in 0..h {
            d[y * w + x] = out_col[y];
        }
    }
    // Rows.
    let mut out_row = vec![0.0f64; w];
    for y in 0..h {
        dt_1d(&d[y * w..(y + 1) * w].to_vec(), &mut out_row);
        d[y * w..(y + 1) * w].copy_from_slice(&out_row);
    }
    d.iter().map(|&v| if v >= INF { f64::INFINITY } else { v.sqrt() }).collect()
}

/// Two-pass chamfer transform with the 5x5 neighborhood and local distances
/// a = 1 (axial), b = sqrt(2) (diagonal), c = sqrt(5) (knight moves).
fn chamfer5(mask: &BinaryMask) -> Vec<f64> {
    let w = mask.width() as i64;
    let h = mask.height() as i64;
    let idx = |x: i64, y: i64| (y * w + x) as usize;
    let mut d: Vec<f64> =
        mask.data().iter().map(|&v| if v == 0 { 0.0 } else { INF }).collect();
    let b = std::f64::consts::SQRT_2;
    let c = 5.0f64.sqrt();
    // Forward mask: neighbors already visited in raster order.
    let forward: [(i64, i64, f64); 8] = [
        (-1, 0, 1.0),
        (-1, -1, b),
        (0, -1, 1.0),
        (1, -1, b),
        (-2, -1, c),
        (-1, -2, c),
        (1, -2, c),
        (2, -1, c),
    ];
    for y in 0..h {
        for x in 0..w {
            let mut best = d[idx(x, y)];
            for &(dx, dy, step) in &forward {
                let (sx, sy) = (x + dx, y + dy);
                if sx < 0 || sy < 0 || sx >= w || sy >= h {
                    continue;
                }
                let cand = d[idx(sx, sy)] + step;
                if cand < best {
                    best = cand;
                }
            }
            d[idx(x, y)] = best;
        }
    }
    let backward: [(i64, i64, f64); 8] = [
        (1, 0, 1.0),
        (1, 1, b),
        (0, 1, 1.0),
        (-1, 1, b),
        (2, 1, c),
        (1, 2, c),
        (-1, 2, c),
        (-2, 1, c),
    ];
    for y in (0..h).rev() {
        for x in (0..w).rev() {
            let mut best = d[idx(x, y)];
            for &(dx, dy, step) in &backward {
                let (sx, sy) = (x + dx, y + dy);
                if sx < 0 || sy < 0 || sx >= w || sy >= h {
                    continue;
                }
                let cand = d[idx(sx, sy)] + step;
                if cand < best {
                    best = cand;
                }
            }
            d[idx(x, y)] = best;
        }
    }
    d.iter().map(|&v| if v >= INF { f64::INFINITY } else { v }).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn brute_force(mask: &BinaryMask) -> Vec<f64> {
        let w = mask.width();
        let h = mask.height();
        let mut out = vec![f64::INFINITY; (w * h) as usize];
        for y in 0..h {
            for x in 0..w {
                if !mask.get(x, y) {
                    out[mask.idx(x, y)] = 0.0;
                    continue;
                }
                let mut best = f64::INFINITY;
                for qy in 0..h {
                    for qx in 0..w {
                        if !mask.get(qx, qy) {
                            let dx = qx as f64 - x as f64;
                            let dy = qy as f64 - y as f64;
                            best = best.min((dx * dx + dy * dy).sqrt());
                        }
                    }
                }
                out[mask.idx(x, y)] = best;
            }
        }
        out
    }

    #[test]
    fn all_background_is_zero() {
        let m = BinaryMask::zeros(4, 4);
        assert!(distance_transform(&m, EdtMode::Exact).iter().all(|&v| v == 0.0));
    }

    #[test]
    fn single_pixel_distance_one() {
        let mut m = BinaryMask::zeros(5, 5);
        m.set(2, 2, true);
        let d = distance_transform(&m, EdtMode::Exact);
        assert_relative_eq!(d[m.idx(2, 2)], 1.0);
    }

    #[test]
    fn solid_square_center() {
        // 5x5 solid square inside an 11x11 frame: center is 3 away from the
        // nearest background pixel center.
        let mut m = BinaryMask::zeros(11, 11);
        for y in 3..8 {
            for x in 3..8 {
                m.set(x, y, true);
            }
        }
        let d = distance_transform(&m, EdtMode::Exact);
        assert_relative_eq!(d[m.idx(5, 5)], 3.0);
        let oracle = brute_force(&m);
        for i in 0..d.len() {
            assert_relative_eq!(d[i], oracle[i], epsilon = 1e-9);
        }
    }

    #[test]
    fn exact_matches_brute_force_exhaustively() {
        // All masks on a 4x3 grid plus pseudorandom 12x12 masks.
        for bits in 0u32..(1 << 12) {
            let data: Vec<u8> = (0..12).map(|i| ((bits >> i) & 1) as u8).collect();
            let m = BinaryMask::new(4, 3, data).unwrap();
            let d = distance_transform(&m, EdtMode::Exact);
            let o = brute_force(&m);
            for i in 0..d.len() {
                if o[i].is_infinite() {
                    assert!(d[i].is_infinite());
                } else {
                    assert_relative_eq!(d[i], o[i], epsilon = 1e-9);
                }
            }
        }
        let mut state = 0x12345678u64;
        for _ in 0..20 {
            let data: Vec<u8> = (0..144)
                .map(|_| {
                    state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                    ((state >> 33) & 1) as u8
                })
                .collect();
            let m = BinaryMask::new(12, 12, data).unwrap();
            let d = distance_transform(&m, EdtMode::Exact);
            let o = brute_force(&m);
            for i in 0..d.len() {
                if o[i].is_infinite() {
                    assert!(d[i].is_infinite());
                } else {
                    assert_relative_eq!(d[i], o[i], epsilon = 1e-9);
                }
            }
        }
    }

    #[test]
    fn chamfer_within_known_bound() {
        // The 5x5 chamfer with exact local steps (1, sqrt2, sqrt5) only
        // over-estimates, worst between the axial and knight directions:
        // max relative error (sqrt(5) - 2 + ...) evaluates to ~2.8%.
        let mut m = BinaryMask::filled(21, 21);
        m.set(0, 0, false);
        let d = distance_transform(&m, EdtMode::Chamfer5);
        let o = brute_force(&m);
        for i in 0..d.len() {
            if o[i] > 0.0 {
                let rel = (d[i] - o[i]) / o[i];
                assert!((-1e-9..0.028).contains(&rel), "rel err {rel} at {i}");
            }
        }
    }
}

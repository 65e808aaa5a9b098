//! Canny edge detection: Gaussian smoothing, Sobel gradients, non-maximum
//! suppression and double-threshold hysteresis.

use super::image::{BinaryMask, GrayImage};
use crate::error::{CoreError, Result};

fn gaussian_kernel(sigma: f64) -> Vec<f64> {
    let r = (3.0 * sigma).ceil().max(1.0) as i32;
    let mut k: Vec<f64> = (-r..=r)
        .map(|i| (-0.5 * (i as f64 / sigma).powi(2)).exp())
        .collect();
    let sum: f64 = k.iter().sum();
    for v in &mut k {
        *v /= sum;
    }
    k
}

fn smooth(img: &GrayImage, sigma: f64) -> Vec<f64> {
    let (w, h) = (img.width() as i32, img.height() as i32);
    if sigma <= 0.0 {
        return img.data().iter().map(|&v| v as f64).collect();
    }
    let k = gaussian_kernel(sigma);
    let r = (k.len() / 2) as i32;
    let mut tmp = vec![0.0f64; img.len()];
    for y in 0..h {
        for x in 0..w {
            let mut acc = 0.0;
            for (i, &kv) in k.iter().enumerate() {
                let sx = (x + i as i32 - r).clamp(0, w - 1);
                acc += kv * img.get(sx as u32, y as u32) as f64;
            }
            tmp[(y * w + x) as usize] = acc;
        }
    }
    let mut out = vec![0.0f64; img.len()];
    for y in 0..h {
        for x in 0..w {
            let mut acc = 0.0;
            for (i, &kv) in k.iter().enumerate() {
                let sy = (y + i as i32 - r).clamp(0, h - 1);
                acc += kv * tmp[(sy * w + x) as usize];
            }
            out[(y * w + x) as usize] = acc;
        }
    }
    out
}

/// Canny edge detector. `lo` and `hi` are hysteresis thresholds expressed as
/// fractions of the maximum gradient magnitude.
pub fn canny_edges(img: &GrayImage, sigma: f64, lo: f64, hi: f64) -> Result<BinaryMask> {
    if !(0.0..=1.0).contains(&lo) || !(0.0..=1.0).contains(&hi) || lo >= hi {
        return Err(CoreError::InvalidParameter(format!(
            "hysteresis thresholds must satisfy 0 <= lo < hi <= 1, got ({lo}, {hi})"
        )));
    }
    let (w, h) = (img.width() as i32, img.height() as i32);
    let s = smooth(img, sigma);
    let at = |x: i32, y: i32| s[(y.clamp(0, h - 1) * w + x.clamp(0, w - 1)) as usize];

    let mut mag = vec![0.0f64; img.len()];
    let mut dir = vec![0u8; img.len()]; // quantized to 4 sectors
    let mut max_mag = 0.0f64;
    for y in 0..h {
        for x in 0..w {
            let gx = (at(x + 1, y - 1) + 2.0 * at(x + 1, y) + at(x + 1, y + 1))
                - (at(x - 1, y - 1) + 2.0 * at(x - 1, y) + at(x - 1, y + 1));
            let gy = (at(x - 1, y + 1) + 2.0 * at(x, y + 1) + at(x + 1, y + 1))
                - (at(x - 1, y - 1) + 2.0 * at(x, y - 1) + at(x + 1, y - 1));
            let m = (gx * gx + gy * gy).sqrt();
            let i = (y * w + x) as usize;
            mag[i] = m;
            max_mag = max_mag.max(m);
            let angle = gy.atan2(gx).to_degrees();
            let a = if angle < 0.0 { angle + 180.0 } else { angle };
            dir[i] = if !(22.5..157.5).contains(&a) {
                0 // horizontal gradient: compare east/west
            } else if a < 67.5 {
                1 // 45 degrees
            } else if a < 112.5 {
                2 // vertical gradient: compare north/south
            } else {
                3 // 135 degrees
            };
        }
    }
    if max_mag == 0.0 {
        return Ok(BinaryMask::zeros(img.width(), img.height()));
    }

    // Non-maximum suppression along the gradient direction.
    let mut nms = vec![0.0f64; img.len()];
    for y in 0..h {
        for x in 0..w {
            let i = (y * w + x) as usize;
            let m = mag[i];
            if m == 0.0 {
                continue;
            }
            let (d1, d2) = match dir[i] {
                0 => ((1i32, 0i32), (-1i32, 0i32)),
                1 => ((1, 1), (-1, -1)),
                2 => ((0, 1), (0, -1)),
                _ => ((1, -1), (-1, 1)),
            };
            let get_m = |dx: i32, dy: i32| -> f64 {
                let sx = x + dx;
                let sy = y + dy;
                if sx < 0 || sy < 0 || sx >= w || sy >= h {
                    0.0
                } else {
                    mag[(sy * w + sx) as usize]
                }
            };
            if m >= get_m(d1.0, d1.1) && m >= get_m(d2.0, d2.1) {
                nms[i] = m;
            }
        }
    }

    // Hysteresis: strong edges seed a flood over weak edges (8-connected).
    let t_hi = hi * max_mag;
    let t_lo = lo * max_mag;
    let mut out = BinaryMask::zeros(img.width(), img.height());
    let mut stack = Vec::new();
    for y in 0..h {
        for x in 0..w {
            let i = (y * w + x) as usize;
            if nms[i] >= t_hi && !out.get(x as u32, y as u32) {
                out.set(x as u32, y as u32, true);
                stack.push((x, y));
                while let Some((cx, cy)) = stack.pop() {
                    for dy in -1..=1i32 {
                        for dx in -1..=1i32 {
                            if dx == 0 && dy == 0 {
                                continue;
                            }
                            let nx = cx + dx;
                            let ny = cy + dy;
                            if nx < 0 || ny < 0 || nx >= w || ny >= h {
                                continue;
                            }
                            let ni = (ny * w + nx) as usize;
                            if nms[ni] > t_lo && !out.get(nx as u32, ny as u32) {
                                out.set(nx as u32, ny as u32, true);
                                stack.push((nx, ny));
                            }
                        }
                    }
                }
            }
        }
    }
    Ok(out)
}

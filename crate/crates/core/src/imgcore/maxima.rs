//! Regional maxima: plateaus strictly higher than their entire
//! structuring-element neighborhood.

use super::image::{BinaryMask, GrayImage, StructuringElement};

/// Mark connected constant-intensity plateaus whose exterior
/// SE-neighborhood pixels are all strictly lower.
///
/// Plateau connectivity is given by the same SE footprint. A plateau with no
/// exterior neighbors (a constant image) is flagged as a maximum: the
/// condition is vacuously true.
pub fn regional_maxima(img: &GrayImage, se: &StructuringElement) -> BinaryMask {
    let (w, h) = (img.width() as i32, img.height() as i32);
    let offsets: Vec<(i32, i32)> =
        se.offsets().into_iter().filter(|&(dx, dy)| (dx, dy) != (0, 0)).collect();
    let mut out = BinaryMask::zeros(img.width(), img.height());
    let mut visited = vec![false; img.len()];
    let mut plateau: Vec<(i32, i32)> = Vec::new();
    let mut stack: Vec<(i32, i32)> = Vec::new();
    for y0 in 0..h {
        for x0 in 0..w {
            let start = (y0 * w + x0) as usize;
            if visited[start] {
                continue;
            }
            let level = img.get(x0 as u32, y0 as u32);
            // Flood the plateau of equal-valued pixels under SE adjacency,
            // checking whether any exterior neighbor is >= level.
            plateau.clear();
            stack.clear();
            visited[start] = true;
            stack.push((x0, y0));
            let mut is_max = true;
            while let Some((cx, cy)) = stack.pop() {
                plateau.push((cx, cy));
                for &(dx, dy) in &offsets {
                    let nx = cx + dx;
                    let ny = cy + dy;
                    if nx < 0 || ny < 0 || nx >= w || ny >= h {
                        continue;
                    }
                    let v = img.get(nx as u32, ny as u32);
                    if v == level {
                        let ni = (ny * w + nx) as usize;
                        if !visited[ni] {
                            visited[ni] = true;
                            stack.push((nx, ny));
                        }
                    } else if v > level {
                        is_max = false;
                    }
                }
            }
            if is_max {
                for &(px, py) in &plateau {
                    out.set(px as u32, py as u32, true);
                }
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_image_is_one_plateau() {
        let img = GrayImage::filled(6, 4, 8, 17);
        let m = regional_maxima(&img, &StructuringElement::square(1));
        assert_eq!(m.area(), 24);
    }

    #[test]
    fn single_peak_pixel() {
        let mut img = GrayImage::zeros(5, 5, 8);
        img.set(2, 2, 9);
        let m = regional_maxima(&img, &StructuringElement::square(1));
        // The surrounding zero plateau touches the higher peak, so only the
        // peak itself is a regional maximum.
        assert!(m.get(2, 2));
        assert_eq!(m.area(), 1);
    }

    #[test]
    fn two_equal_peaks_both_flagged() {
        let mut img = GrayImage::zeros(9, 3, 8);
        img.set(2, 1, 7);
        img.set(6, 1, 7);
        let m = regional_maxima(&img, &StructuringElement::square(1));
        assert!(m.get(2, 1));
        assert!(m.get(6, 1));
        // Plateau-flood oracle: the zero background touches both peaks, so it
        // is not a maximum.
        assert!(!m.get(0, 0));
        assert_eq!(m.area(), 2);
    }
}

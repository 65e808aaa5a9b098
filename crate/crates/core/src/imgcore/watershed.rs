//! Marker-controlled watershed by priority-queue flooding.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use super::image::{GrayImage, LabelMap};
use crate::error::{CoreError, Result};

/// Flood the relief from the markers: pixels are processed in increasing
/// relief order with first-in-first-out tie-breaking, and every pixel ends up
/// carrying the label of the marker that reached it first. 4-neighborhood.
pub fn watershed(relief: &GrayImage, markers: &LabelMap) -> Result<LabelMap> {
    if relief.width() != markers.width() || relief.height() != markers.height() {
        return Err(CoreError::DimensionMismatch("relief vs markers".into()));
    }
    if markers.count() == 0 {
        return Err(CoreError::EmptyMask("watershed needs at least one marker".into()));
    }
    let (w, h) = (relief.width() as i32, relief.height() as i32);
    let mut out = markers.clone();
    // Min-heap keyed by (relief value, insertion sequence) so that plateaus
    // are scanned breadth-first in queue order.
    let mut heap: BinaryHeap<Reverse<(u16, u64, u32, u32)>> = BinaryHeap::new();
    let mut seq: u64 = 0;
    let mut queued = vec![false; relief.len()];
    let neighbors = [(1i32, 0i32), (-1, 0), (0, 1), (0, -1)];

    let push =
        |heap: &mut BinaryHeap<Reverse<(u16, u64, u32, u32)>>, queued: &mut Vec<bool>, seq: &mut u64, x: u32, y: u32| {
            let i = relief.idx(x, y);
            if !queued[i] {
                queued[i] = true;
                heap.push(Reverse((relief.get(x, y), *seq, x, y)));
                *seq += 1;
            }
        };

    for y in 0..h {
        for x in 0..w {
            if out.get(x as u32, y as u32) != 0 {
                for &(dx, dy) in &neighbors {
                    let nx = x + dx;
                    let ny = y + dy;
                    if nx < 0 || ny < 0 || nx >= w || ny >= h {
                        continue;
                    }
                    if out.get(nx as u32, ny as u32) == 0 {
                        push(&mut heap, &mut queued, &mut seq, nx as u32, ny as u32);
                    }
                }
            }
        }
    }

    while let Some(Reverse((_, _, x, y))) = heap.pop() {
        if out.get(x, y) != 0 {
            continue;
        }
        // Adopt the label of any already-labeled neighbor (first in fixed
        // scan order keeps the result deterministic).
        let mut label = 0;
        for &(dx, dy) in &neighbors {
            let nx = x as i32 + dx;
            let ny = y as i32 + dy;
            if nx < 0 || ny < 0 || nx >= w || ny >= h {
                continue;
            }
            let l = out.get(nx as u32, ny as u32);
            if l != 0 {
                label = l;
                break;
            }
        }
        debug_assert!(label != 0, "queued pixel must touch a labeled one");
        out.set(x, y, label);
        for &(dx, dy) in &neighbors {
            let nx = x as i32 + dx;
            let ny = y as i32 + dy;
            if nx < 0 || ny < 0 || nx >= w || ny >= h {
                continue;
            }
            if out.get(nx as u32, ny as u32) == 0 {
                push(&mut heap, &mut queued, &mut seq, nx as u32, ny as u32);
            }
        }
    }
    Ok(out)
}

/// Absolute 3x3 Laplacian of the image, linearly rescaled to the full
/// intensity range; the edge relief used by the nuclei pipeline.
pub fn laplacian_relief(img: &GrayImage) -> GrayImage {
    let (w, h) = (img.width() as i32, img.height() as i32);
    let mut lap = vec![0.0f64; img.len()];
    let mut max = 0.0f64;
    for y in 0..h {
        for x in 0..w {
            let c = img.get(x as u32, y as u32) as f64;
            let mut sum = 0.0;
            for (dx, dy) in [(1i32, 0i32), (-1, 0), (0, 1), (0, -1)] {
                let sx = (x + dx).clamp(0, w - 1) as u32;
                let sy = (y + dy).clamp(0, h - 1) as u32;
                sum += img.get(sx, sy) as f64;
            }
            let v = (sum - 4.0 * c).abs();
            lap[(y * w + x) as usize] = v;
            max = max.max(v);
        }
    }
    let mut out = GrayImage::zeros(img.width(), img.height(), 16);
    if max > 0.0 {
        for (i, &v) in lap.iter().enumerate() {
            out.data_mut()[i] = (v / max * u16::MAX as f64).round() as u16;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::imgcore::image::BinaryMask;
    use crate::imgcore::{connected_components, Connectivity};

    fn markers_from(mask: &BinaryMask) -> LabelMap {
        connected_components(mask, Connectivity::Four)
    }

    #[test]
    fn one_marker_floods_everything() {
        let relief = GrayImage::filled(6, 5, 8, 3);
        let mut seeds = BinaryMask::zeros(6, 5);
        seeds.set(2, 2, true);
        let out = watershed(&relief, &markers_from(&seeds)).unwrap();
        assert!(out.labels().iter().all(|&l| l == 1));
    }

    #[test]
    fn no_markers_is_error() {
        let relief = GrayImage::zeros(3, 3, 8);
        assert!(watershed(&relief, &LabelMap::zeros(3, 3)).is_err());
    }

    #[test]
    fn flat_relief_partitions_all_pixels() {
        let relief = GrayImage::zeros(9, 9, 8);
        let mut seeds = BinaryMask::zeros(9, 9);
        seeds.set(1, 4, true);
        seeds.set(7, 4, true);
        let out = watershed(&relief, &markers_from(&seeds)).unwrap();
        assert!(out.labels().iter().all(|&l| l != 0), "totality");
        assert_eq!(out.get(1, 4), 1);
        assert_eq!(out.get(7, 4), 2);
        // Geodesic split: left columns go to marker 1, right to marker 2.
        assert_eq!(out.get(0, 0), 1);
        assert_eq!(out.get(8, 8), 2);
    }

    #[test]
    fn ridge_separates_basins() {
        // Two basins (value 0) separated by a ridge column (value 9).
        let mut relief = GrayImage::zeros(7, 7, 8);
        for y in 0..7 {
            relief.set(3, y, 9);
        }
        let mut seeds = BinaryMask::zeros(7, 7);
        seeds.set(1, 3, true);
        seeds.set(5, 3, true);
        let out = watershed(&relief, &markers_from(&seeds)).unwrap();
        // Exhaustive flooding oracle: every pixel strictly left of the ridge
        // is reached by marker 1 first, strictly right by marker 2; ridge
        // pixels are claimed only after both floods arrive, by queue order.
        for y in 0..7 {
            for x in 0..3 {
                assert_eq!(out.get(x, y), 1, "({x},{y})");
            }
            for x in 4..7 {
                assert_eq!(out.get(x, y), 2, "({x},{y})");
            }
        }
        // Boundary lies on the ridge pixels and each one carries some label.
        for y in 0..7 {
            assert!(out.get(3, y) == 1 || out.get(3, y) == 2);
        }
    }

    #[test]
    fn invariant_under_relief_shift() {
        let mut relief = GrayImage::zeros(8, 8, 8);
        for y in 0..8 {
            for x in 0..8 {
                relief.set(x, y, ((x * 13 + y * 7) % 50) as u16);
            }
        }
        let mut shifted = relief.clone();
        for v in shifted.data_mut() {
            *v += 100;
        }
        let mut seeds = BinaryMask::zeros(8, 8);
        seeds.set(0, 0, true);
        seeds.set(7, 7, true);
        let markers = markers_from(&seeds);
        assert_eq!(watershed(&relief, &markers).unwrap(), watershed(&shifted, &markers).unwrap());
    }

    #[test]
    fn markers_keep_their_labels() {
        let relief = GrayImage::zeros(5, 5, 8);
        let mut seeds = BinaryMask::zeros(5, 5);
        seeds.set(0, 0, true);
        seeds.set(4, 4, true);
        let markers = markers_from(&seeds);
        let out = watershed(&relief, &markers).unwrap();
        assert_eq!(out.get(0, 0), 1);
        assert_eq!(out.get(4, 4), 2);
    }
}

//! Connected components, size filtering, hole filling and shape features.

use super::image::{BinaryMask, ComponentFeatures, LabelMap};
use crate::error::{CoreError, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Connectivity {
    Four,
    Eight,
}

impl Connectivity {
    fn offsets(self) -> &'static [(i32, i32)] {
        match self {
            Connectivity::Four => &[(1, 0), (-1, 0), (0, 1), (0, -1)],
            Connectivity::Eight => &[
                (1, 0),
                (-1, 0),
                (0, 1),
                (0, -1),
                (1, 1),
                (1, -1),
                (-1, 1),
                (-1, -1),
            ],
        }
    }
}

/// Label maximal connected foreground sets 1..=count, in raster-scan order of
/// each component's first pixel. Same input always yields bitwise-same output.
pub fn connected_components(mask: &BinaryMask, connectivity: Connectivity) -> LabelMap {
    let (w, h) = (mask.width(), mask.height());
    let mut labels = LabelMap::zeros(w, h);
    let offsets = connectivity.offsets();
    let mut count = 0u32;
    let mut stack = Vec::new();
    for y in 0..h {
        for x in 0..w {
            if !mask.get(x, y) || labels.get(x, y) != 0 {
                continue;
            }
            count += 1;
            labels.set(x, y, count);
            stack.push((x, y));
            while let Some((cx, cy)) = stack.pop() {
                for &(dx, dy) in offsets {
                    let nx = cx as i32 + dx;
                    let ny = cy as i32 + dy;
                    if nx < 0 || ny < 0 || nx >= w as i32 || ny >= h as i32 {
                        continue;
                    }
                    let (nx, ny) = (nx as u32, ny as u32);
                    if mask.get(nx, ny) && labels.get(nx, ny) == 0 {
                        labels.set(nx, ny, count);
                        stack.push((nx, ny));
                    }
                }
            }
        }
    }
    labels.set_count(count);
    labels
}

/// Remove components whose area is strictly less than `min_area`.
pub fn remove_small(mask: &BinaryMask, min_area: usize, connectivity: Connectivity) -> BinaryMask {
    if min_area == 0 {
        return mask.clone();
    }
    let labels = connected_components(mask, connectivity);
    let mut areas = vec![0usize; labels.count() as usize + 1];
    for &l in labels.labels() {
        areas[l as usize] += 1;
    }
    let mut out = BinaryMask::zeros(mask.width(), mask.height());
    for y in 0..mask.height() {
        for x in 0..mask.width() {
            let l = labels.get(x, y);
            if l != 0 && areas[l as usize] >= min_area {
                out.set(x, y, true);
            }
        }
    }
    out
}

/// Fill holes: background components not reachable by a 4-connected flood
/// fill from the image border become foreground.
pub fn fill_holes(mask: &BinaryMask) -> BinaryMask {
    let (w, h) = (mask.width(), mask.height());
    let mut reachable = BinaryMask::zeros(w, h);
    let mut stack = Vec::new();
    let seed = |x: u32, y: u32, stack: &mut Vec<(u32, u32)>, reachable: &mut BinaryMask| {
        if !mask.get(x, y) && !reachable.get(x, y) {
            reachable.set(x, y, true);
            stack.push((x, y));
        }
    };
    for x in 0..w {
        seed(x, 0, &mut stack, &mut reachable);
        seed(x, h - 1, &mut stack, &mut reachable);
    }
    for y in 0..h {
        seed(0, y, &mut stack, &mut reachable);
        seed(w - 1, y, &mut stack, &mut reachable);
    }
    while let Some((cx, cy)) = stack.pop() {
        for (dx, dy) in [(1i32, 0i32), (-1, 0), (0, 1), (0, -1)] {
            let nx = cx as i32 + dx;
            let ny = cy as i32 + dy;
            if nx < 0 || ny < 0 || nx >= w as i32 || ny >= h as i32 {
                continue;
            }
            let (nx, ny) = (nx as u32, ny as u32);
            if !mask.get(nx, ny) && !reachable.get(nx, ny) {
                reachable.set(nx, ny, true);
                stack.push((nx, ny));
            }
        }
    }
    // Foreground = original foreground plus unreachable background.
    let data = mask
        .data()
        .iter()
        .zip(reachable.data())
        .map(|(&m, &r)| if m == 1 || r == 0 { 1 } else { 0 })
        .collect();
    BinaryMask::new(w, h, data).expect("same dims")
}

/// Area, centroid, moment-based eccentricity and extent of component `label`.
pub fn shape_features(labels: &LabelMap, label: u32) -> Result<ComponentFeatures> {
    if label == 0 || label > labels.count() {
        return Err(CoreError::InvalidParameter(format!(
            "label {label} not in 1..={}",
            labels.count()
        )));
    }
    let mut area = 0usize;
    let mut sx = 0.0;
    let mut sy = 0.0;
    let (mut x0, mut y0, mut x1, mut y1) = (u32::MAX, u32::MAX, 0u32, 0u32);
    for y in 0..labels.height() {
        for x in 0..labels.width() {
            if labels.get(x, y) == label {
                area += 1;
                sx += x as f64;
                sy += y as f64;
                x0 = x0.min(x);
                y0 = y0.min(y);
                x1 = x1.max(x);
                y1 = y1.max(y);
            }
        }
    }
    if area == 0 {
        return Err(CoreError::InvalidParameter(format!("label {label} has no pixels")));
    }
    let cx = sx / area as f64;
    let cy = sy / area as f64;
    // Second central moments over pixel centers.
    let (mut mu20, mut mu02, mut mu11) = (0.0, 0.0, 0.0);
    for y in 0..labels.height() {
        for x in 0..labels.width() {
            if labels.get(x, y) == label {
                let dx = x as f64 - cx;
                let dy = y as f64 - cy;
                mu20 += dx * dx;
                mu02 += dy * dy;
                mu11 += dx * dy;
            }
        }
    }
    mu20 /= area as f64;
    mu02 /= area as f64;
    mu11 /= area as f64;
    // Eigenvalues of the covariance matrix give the equivalent-ellipse axes.
    let tr = mu20 + mu02;
    let det = mu20 * mu02 - mu11 * mu11;
    let disc = (tr * tr / 4.0 - det).max(0.0).sqrt();
    let l1 = tr / 2.0 + disc;
    let l2 = tr / 2.0 - disc;
    let eccentricity = if l1 <= 0.0 {
        0.0 // single pixel: no spread in any direction
    } else {
        let e = (1.0 - (l2 / l1).max(0.0)).sqrt();
        // Collinear components would give exactly 1; clamp inside [0, 1).
        e.min(0.999)
    };
    let bbox_area = ((x1 - x0 + 1) as usize) * ((y1 - y0 + 1) as usize);
    Ok(ComponentFeatures {
        area,
        centroid: (cx, cy),
        eccentricity,
        extent: area as f64 / bbox_area as f64,
    })
}

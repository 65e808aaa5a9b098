//! Convex hull of a binary mask, rasterized over pixel centers.

use super::image::BinaryMask;
use crate::error::{CoreError, Result};

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Andrew's monotone chain over integer points. Returns the hull in
/// counter-clockwise order (y axis pointing down), without repetition.
fn monotone_chain(points: &mut Vec<(i64, i64)>) -> Vec<(i64, i64)> {
    points.sort_unstable();
    points.dedup();
    let n = points.len();
    if n <= 2 {
        return points.clone();
    }
    let cross = |o: (i64, i64), a: (i64, i64), b: (i64, i64)| -> i64 {
        (a.0 - o.0) * (b.1 - o.1) - (a.1 - o.1) * (b.0 - o.0)
    };
    let mut hull: Vec<(i64, i64)> = Vec::with_capacity(2 * n);
    for &p in points.iter() {
        while hull.len() >= 2 && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0 {
            hull.pop();
        }
        hull.push(p);
    }
    let lower_len = hull.len() + 1;
    for &p in points.iter().rev() {
        while hull.len() >= lower_len && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0 {
            hull.pop();
        }
        hull.push(p);
    }
    hull.pop();
    hull
}

/// Filled rasterization of the convex hull of all foreground pixel centers.
/// The result is a superset of the input and idempotent.
pub fn convex_hull(mask: &BinaryMask) -> Result<BinaryMask> {
    let mut points: Vec<(i64, i64)> = Vec::new();
    for y in 0..mask.height() {
        for x in 0..mask.width() {
            if mask.get(x, y) {
                points.push((x as i64, y as i64));
            }
        }
    }
    if points.is_empty() {
        return Err(CoreError::EmptyMask("convex_hull".into()));
    }
    let hull = monotone_chain(&mut points);
    let mut out = mask.clone();
    if hull.len() <= 2 {
        // Collinear mask: fill the integer lattice points lying exactly on
        // the segment between the two extremes.
        if hull.len() == 2 {
            let (a, b) = (hull[0], hull[1]);
            let (dx, dy) = (b.0 - a.0, b.1 - a.1);
            let g = gcd(dx.unsigned_abs(), dy.unsigned_abs()) as i64;
            for t in 0..=g {
                out.set((a.0 + t * dx / g) as u32, (a.1 + t * dy / g) as u32, true);
            }
        }
        return Ok(out);
    }
    // A pixel belongs to the hull iff its center is inside or on every edge
    // (hull vertices are in counter-clockwise order, cross >= 0 means inside).
    let (bx0, by0, bw, bh) = mask.bounding_box().expect("non-empty");
    for y in by0..by0 + bh {
        for x in bx0..bx0 + bw {
            if out.get(x, y) {
                continue;
            }
            let p = (x as i64, y as i64);
            let mut inside = true;
            for i in 0..hull.len() {
                let a = hull[i];
                let b = hull[(i + 1) % hull.len()];
                let cross = (b.0 - a.0) * (p.1 - a.1) - (b.1 - a.1) * (p.0 - a.0);
                if cross < 0 {
                    inside = false;
                    break;
                }
            }
            if inside {
                out.set(x, y, true);
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_pixel_hull() {
        let mut m = BinaryMask::zeros(5, 5);
        m.set(2, 3, true);
        assert_eq!(convex_hull(&m).unwrap(), m);
    }

    #[test]
    fn empty_mask_errors() {
        assert!(convex_hull(&BinaryMask::zeros(4, 4)).is_err());
    }

    #[test]
    fn four_corners_fill_square() {
        let mut m = BinaryMask::zeros(8, 8);
        for (x, y) in [(1, 1), (5, 1), (1, 6), (5, 6)] {
            m.set(x, y, true);
        }
        let hull = convex_hull(&m).unwrap();
        for y in 1..=6 {
            for x in 1..=5 {
                assert!(hull.get(x, y), "({x},{y}) must be filled");
            }
        }
        assert_eq!(hull.area(), 5 * 6);
    }

    #[test]
    fn crescent_concavity_is_closed() {
        // Arch: ring with the lower half missing; the hull must include the
        // cavity between the arms. Gift-wrapping oracle on pixel centers.
        let mut m = BinaryMask::zeros(15, 15);
        for (dx, dy) in crate::imgcore::StructuringElement::disk(5).offsets() {
            let d2 = dx * dx + dy * dy;
            if (9..=25).contains(&d2) && dy <= 0 {
                m.set((7 + dx) as u32, (7 + dy) as u32, true);
            }
        }
        let hull = convex_hull(&m).unwrap();
        assert!(m.is_subset_of(&hull));
        // The cavity point between the arms is inside the hull.
        assert!(hull.get(7, 5));
        // Oracle: every output pixel center lies inside the hull of the
        // input points computed by a brute-force extreme-point test: a point
        // is in the hull iff no half-plane through two input points leaves
        // it strictly outside with all inputs on the other side.
        let pts: Vec<(i64, i64)> = (0..15u32)
            .flat_map(|y| (0..15u32).filter_map(move |x| None.or(Some((x, y)))))
            .filter(|&(x, y)| m.get(x, y))
            .map(|(x, y)| (x as i64, y as i64))
            .collect();
        for y in 0..15u32 {
            for x in 0..15u32 {
                let p = (x as i64, y as i64);
                let mut best_inside = true;
                'pairs: for i in 0..pts.len() {
                    for j in 0..pts.len() {
                        if i == j {
                            continue;
                        }
                        let (a, b) = (pts[i], pts[j]);
                        let side = |q: (i64, i64)| (b.0 - a.0) * (q.1 - a.1) - (b.1 - a.1) * (q.0 - a.0);
                        if side(p) < 0 && pts.iter().all(|&q| side(q) >= 0) {
                            best_inside = false;
                            break 'pairs;
                        }
                    }
                }
                assert_eq!(hull.get(x, y), best_inside, "hull mismatch at ({x},{y})");
            }
        }
    }

    #[test]
    fn collinear_mask_fills_segment() {
        let mut m = BinaryMask::zeros(6, 3);
        m.set(0, 1, true);
        m.set(4, 1, true);
        let hull = convex_hull(&m).unwrap();
        for x in 0..=4 {
            assert!(hull.get(x, 1));
        }
        assert_eq!(hull.area(), 5);
        assert_eq!(convex_hull(&hull).unwrap(), hull);
    }

    #[test]
    fn hull_is_idempotent_superset() {
        let mut m = BinaryMask::zeros(10, 10);
        for (x, y) in [(2, 2), (7, 3), (4, 8), (3, 5)] {
            m.set(x, y, true);
        }
        let h1 = convex_hull(&m).unwrap();
        let h2 = convex_hull(&h1).unwrap();
        assert!(m.is_subset_of(&h1));
        assert_eq!(h1, h2);
    }
}

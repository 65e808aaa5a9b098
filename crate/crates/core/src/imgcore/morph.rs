//! Binary mathematical morphology under a structuring-element footprint.
//!
//! Out-of-image footprint samples are ignored (the footprint is clipped at
//! the borders), which keeps the erosion/dilation duality exact on the
//! finite image domain for symmetric elements.

use super::image::{BinaryMask, StructuringElement};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MorphOp {
    Erode,
    Dilate,
    Open,
    Close,
}

/// Binary erosion: a pixel stays set iff every in-image footprint sample is set.
pub fn erode(mask: &BinaryMask, se: &StructuringElement) -> BinaryMask {
    let offsets = se.offsets();
    let (w, h) = (mask.width() as i32, mask.height() as i32);
    let mut out = BinaryMask::zeros(mask.width(), mask.height());
    for y in 0..h {
        for x in 0..w {
            let mut all = true;
            for &(dx, dy) in &offsets {
                let sx = x + dx;
                let sy = y + dy;
                if sx < 0 || sy < 0 || sx >= w || sy >= h {
                    continue;
                }
                if !mask.get(sx as u32, sy as u32) {
                    all = false;
                    break;
                }
            }
            out.set(x as u32, y as u32, all);
        }
    }
    out
}

/// Binary dilation: a pixel becomes set iff any in-image footprint sample is set.
pub fn dilate(mask: &BinaryMask, se: &StructuringElement) -> BinaryMask {
    let offsets = se.offsets();
    let (w, h) = (mask.width() as i32, mask.height() as i32);
    let mut out = BinaryMask::zeros(mask.width(), mask.height());
    for y in 0..h {
        for x in 0..w {
            let mut any = false;
            for &(dx, dy) in &offsets {
                let sx = x + dx;
                let sy = y + dy;
                if sx < 0 || sy < 0 || sx >= w || sy >= h {
                    continue;
                }
                if mask.get(sx as u32, sy as u32) {
                    any = true;
                    break;
                }
            }
            out.set(x as u32, y as u32, any);
        }
    }
    out
}

/// Opening: erosion followed by dilation.
pub fn open(mask: &BinaryMask, se: &StructuringElement) -> BinaryMask {
    dilate(&erode(mask, se), se)
}

/// Closing: dilation followed by erosion.
pub fn close(mask: &BinaryMask, se: &StructuringElement) -> BinaryMask {
    erode(&dilate(mask, se), se)
}

/// Dispatch on [`MorphOp`].
pub fn morphology(mask: &BinaryMask, op: MorphOp, se: &StructuringElement) -> BinaryMask {
    match op {
        MorphOp::Erode => erode(mask, se),
        MorphOp::Dilate => dilate(mask, se),
        MorphOp::Open => open(mask, se),
        MorphOp::Close => close(mask, se),
    }
}

/// Inner boundary: foreground pixels with at least one 4-neighbor background
/// pixel. Pixels on the image border count the outside as background.
pub fn inner_boundary(mask: &BinaryMask) -> BinaryMask {
    let (w, h) = (mask.width() as i32, mask.height() as i32);
    let mut out = BinaryMask::zeros(mask.width(), mask.height());
    for y in 0..h {
        for x in 0..w {
            if !mask.get(x as u32, y as u32) {
                continue;
            }
            let mut edge = false;
            for (dx, dy) in [(1i32, 0i32), (-1, 0), (0, 1), (0, -1)] {
                let sx = x + dx;
                let sy = y + dy;
                if sx < 0 || sy < 0 || sx >= w || sy >= h || !mask.get(sx as u32, sy as u32) {
                    edge = true;
                    break;
                }
            }
            out.set(x as u32, y as u32, edge);
        }
    }
    out
}

//! 2D affine transforms about the image center, resampling, and the
//! plain-text serialization format.

use crate::error::{CoreError, Result};
use crate::imgcore::GrayImage;

/// Interpolation used when resampling.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Interp {
    Nearest,
    Bilinear,
    /// Catmull-Rom cubic.
    CubicSpline,
}

/// Affine transform parameterized as translation (pixels), rotation
/// (radians), anisotropic scale and x-shear, composed about the image
/// center: `p' = C + T + R * Shear * S * (p - C)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AffineTransform2D {
    pub tx: f64,
    pub ty: f64,
    pub rotation: f64,
    pub scale_x: f64,
    pub scale_y: f64,
    pub shear: f64,
}

impl Default for AffineTransform2D {
    fn default() -> Self {
        Self::identity()
    }
}

impl AffineTransform2D {
    pub fn identity() -> Self {
        Self { tx: 0.0, ty: 0.0, rotation: 0.0, scale_x: 1.0, scale_y: 1.0, shear: 0.0 }
    }

    pub fn translation(tx: f64, ty: f64) -> Self {
        Self { tx, ty, ..Self::identity() }
    }

    pub fn from_params(p: &[f64; 6]) -> Self {
        Self { tx: p[0], ty: p[1], rotation: p[2], scale_x: p[3], scale_y: p[4], shear: p[5] }
    }

    pub fn params(&self) -> [f64; 6] {
        [self.tx, self.ty, self.rotation, self.scale_x, self.scale_y, self.shear]
    }

    pub fn validate(&self) -> Result<()> {
        if self.scale_x <= 0.0 || self.scale_y <= 0.0 {
            return Err(CoreError::InvalidParameter("scales must be positive".into()));
        }
        Ok(())
    }

    /// Linear 2x2 part `R * Shear * S` (row-major a, b, d, e).
    fn linear(&self) -> [f64; 4] {
        let (s, c) = self.rotation.sin_cos();
        // R = [c -s; s c], Shear = [1 h; 0 1], S = diag(sx, sy).
        let (sx, sy) = (self.scale_x, self.scale_y);
        let h = self.shear;
        // R * Shear = [c, c*h - s; s, s*h + c]; then * S scales columns.
        [c * sx, (c * h - s) * sy, s * sx, (s * h + c) * sy]
    }

    /// 3x3 homogeneous matrix mapping centered source coordinates to
    /// centered destination coordinates.
    pub fn matrix(&self) -> [[f64; 3]; 3] {
        let [a, b, d, e] = self.linear();
        [[a, b, self.tx], [d, e, self.ty], [0.0, 0.0, 1.0]]
    }

    /// Map a point through the forward transform, with `(cx, cy)` the
    /// rotation/scale center.
    pub fn apply(&self, x: f64, y: f64, cx: f64, cy: f64) -> (f64, f64) {
        let [a, b, d, e] = self.linear();
        let (ux, uy) = (x - cx, y - cy);
        (cx + self.tx + a * ux + b * uy, cy + self.ty + d * ux + e * uy)
    }

    /// Map a destination point back to source coordinates.
    pub fn apply_inverse(&self, x: f64, y: f64, cx: f64, cy: f64) -> Result<(f64, f64)> {
        let [a, b, d, e] = self.linear();
        let det = a * e - b * d;
        if det.abs() < 1e-12 {
            return Err(CoreError::InvalidParameter("singular transform".into()));
        }
        let (ux, uy) = (x - cx - self.tx, y - cy - self.ty);
        Ok((cx + (e * ux - b * uy) / det, cy + (-d * ux + a * uy) / det))
    }

    /// Serialize: three matrix rows then a `params` line.
    pub fn to_text(&self) -> String {
        let m = self.matrix();
        let mut out = String::new();
        for row in &m {
            out.push_str(&format!("{:.12e} {:.12e} {:.12e}\n", row[0], row[1], row[2]));
        }
        out.push_str(&format!(
            "params {:.12e} {:.12e} {:.12e} {:.12e} {:.12e} {:.12e}\n",
            self.tx, self.ty, self.rotation, self.scale_x, self.scale_y, self.shear
        ));
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let params_line = text
            .lines()
            .find(|l| l.trim_start().starts_with("params"))
            .ok_or_else(|| CoreError::InvalidInput("missing params line".into()))?;
        let vals: Vec<f64> = params_line
            .split_whitespace()
            .skip(1)
            .map(|t| t.parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| CoreError::InvalidInput(format!("bad params line: {e}")))?;
        if vals.len() != 6 {
            return Err(CoreError::InvalidInput("params line needs 6 values".into()));
        }
        Ok(Self {
            tx: vals[0],
            ty: vals[1],
            rotation: vals[2],
            scale_x: vals[3],
            scale_y: vals[4],
            shear: vals[5],
        })
    }
}

/// Resample `img` under the transform (inverse mapping); out-of-domain
/// samples are zero. Returns the image and a validity mask raster.
pub fn apply_transform_with_mask(
    img: &GrayImage,
    t: &AffineTransform2D,
    interp: Interp,
) -> Result<(GrayImage, Vec<bool>)> {
    t.validate()?;
    let (w, h) = (img.width(), img.height());
    let cx = (w as f64 - 1.0) / 2.0;
    let cy = (h as f64 - 1.0) / 2.0;
    let mut out = GrayImage::zeros(w, h, img.depth());
    let mut valid = vec![false; img.len()];
    let max_v = img.max_value() as f64;
    for y in 0..h {
        for x in 0..w {
            let (sx, sy) = t.apply_inverse(x as f64, y as f64, cx, cy)?;
            let inside = sx >= 0.0 && sy >= 0.0 && sx <= (w - 1) as f64 && sy <= (h - 1) as f64;
            if !inside {
                continue;
            }
            let v = match interp {
                Interp::Nearest => img.get(sx.round() as u32, sy.round() as u32) as f64,
                Interp::Bilinear => bilinear(img, sx, sy),
                Interp::CubicSpline => catmull_rom(img, sx, sy),
            };
            let i = out.idx(x, y);
            out.data_mut()[i] = v.round().clamp(0.0, max_v) as u16;
            valid[i] = true;
        }
    }
    Ok((out, valid))
}

/// Resample without the validity mask.
pub fn apply_transform(img: &GrayImage, t: &AffineTransform2D, interp: Interp) -> Result<GrayImage> {
    Ok(apply_transform_with_mask(img, t, interp)?.0)
}

fn bilinear(img: &GrayImage, x: f64, y: f64) -> f64 {
    let x0 = x.floor() as i64;
    let y0 = y.floor() as i64;
    let fx = x - x0 as f64;
    let fy = y - y0 as f64;
    let w = img.width() as i64;
    let h = img.height() as i64;
    let pix = |xx: i64, yy: i64| img.get(xx.clamp(0, w - 1) as u32, yy.clamp(0, h - 1) as u32) as f64;
    let v00 = pix(x0, y0);
    let v10 = pix(x0 + 1, y0);
    let v01 = pix(x0, y0 + 1);
    let v11 = pix(x0 + 1, y0 + 1);
    v00 * (1.0 - fx) * (1.0 - fy) + v10 * fx * (1.0 - fy) + v01 * (1.0 - fx) * fy + v11 * fx * fy
}

fn catmull_rom(img: &GrayImage, x: f64, y: f64) -> f64 {
    let kernel = |t: f64| -> f64 {
        let t = t.abs();
        if t < 1.0 {
            1.5 * t * t * t - 2.5 * t * t + 1.0
        } else if t < 2.0 {
            -0.5 * t * t * t + 2.5 * t * t - 4.0 * t + 2.0
        } else {
            0.0
        }
    };
    let x0 = x.floor() as i64;
    let y0 = y.floor() as i64;
    let w = img.width() as i64;
    let h = img.height() as i64;
    let pix = |xx: i64, yy: i64| img.get(xx.clamp(0, w - 1) as u32, yy.clamp(0, h - 1) as u32) as f64;
    let mut acc = 0.0;
    let mut wsum = 0.0;
    for dy in -1..=2i64 {
        for dx in -1..=2i64 {
            let wgt = kernel(x - (x0 + dx) as f64) * kernel(y - (y0 + dy) as f64);
            acc += wgt * pix(x0 + dx, y0 + dy);
            wsum += wgt;
        }
    }
    acc / wsum
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn gradient_image(w: u32, h: u32) -> GrayImage {
        let mut img = GrayImage::zeros(w, h, 8);
        for y in 0..h {
            for x in 0..w {
                let cx = (w as f64 - 1.0) / 2.0;
                let cy = (h as f64 - 1.0) / 2.0;
                let d = ((x as f64 - cx).powi(2) + (y as f64 - cy).powi(2)).sqrt();
                img.set(x, y, (200.0 * (-d * d / 200.0).exp()).round() as u16 + (x % 7) as u16);
            }
        }
        img
    }

    #[test]
    fn identity_is_bitwise_equal() {
        let img = gradient_image(24, 20);
        for interp in [Interp::Nearest, Interp::Bilinear, Interp::CubicSpline] {
            let out = apply_transform(&img, &AffineTransform2D::identity(), interp).unwrap();
            assert_eq!(out, img, "{interp:?}");
        }
    }

    #[test]
    fn integer_translation_nearest_is_exact_shift() {
        let img = gradient_image(20, 16);
        let t = AffineTransform2D::translation(3.0, -2.0);
        let out = apply_transform(&img, &t, Interp::Nearest).unwrap();
        for y in 0..16i64 {
            for x in 0..20i64 {
                let sx = x - 3;
                let sy = y + 2;
                if sx >= 0 && sy >= 0 && sx < 20 && sy < 16 {
                    assert_eq!(out.get(x as u32, y as u32), img.get(sx as u32, sy as u32));
                }
            }
        }
    }

    #[test]
    fn rotation_roundtrip_is_close_in_interior() {
        let img = gradient_image(32, 32);
        let theta = 12f64.to_radians();
        let fwd = AffineTransform2D { rotation: theta, ..AffineTransform2D::identity() };
        let back = AffineTransform2D { rotation: -theta, ..AffineTransform2D::identity() };
        let r1 = apply_transform(&img, &fwd, Interp::Bilinear).unwrap();
        let r2 = apply_transform(&r1, &back, Interp::Bilinear).unwrap();
        let mut se = 0.0;
        let mut n = 0.0;
        for y in 8..24u32 {
            for x in 8..24u32 {
                se += (r2.get(x, y) as f64 - img.get(x, y) as f64).powi(2);
                n += 1.0;
            }
        }
        let mse = se / n;
        assert!(mse < 30.0, "interior mse {mse}");
    }

    #[test]
    fn singular_transform_is_rejected() {
        let img = gradient_image(8, 8);
        let t = AffineTransform2D { scale_x: 0.0, ..AffineTransform2D::identity() };
        assert!(apply_transform(&img, &t, Interp::Nearest).is_err());
    }

    #[test]
    fn forward_and_inverse_are_consistent() {
        let t = AffineTransform2D {
            tx: 4.0,
            ty: -2.0,
            rotation: 0.35,
            scale_x: 1.2,
            scale_y: 0.9,
            shear: 0.1,
        };
        let (x, y) = t.apply(13.0, 7.0, 16.0, 16.0);
        let (bx, by) = t.apply_inverse(x, y, 16.0, 16.0).unwrap();
        assert_relative_eq!(bx, 13.0, epsilon = 1e-9);
        assert_relative_eq!(by, 7.0, epsilon = 1e-9);
    }

    #[test]
    fn text_roundtrip() {
        let t = AffineTransform2D {
            tx: 7.0,
            ty: -4.0,
            rotation: 0.17,
            scale_x: 1.05,
            scale_y: 0.95,
            shear: -0.02,
        };
        let s = t.to_text();
        let back = AffineTransform2D::from_text(&s).unwrap();
        assert_relative_eq!(t.tx, back.tx);
        assert_relative_eq!(t.rotation, back.rotation);
        assert_relative_eq!(t.shear, back.shear);
        assert!(AffineTransform2D::from_text("garbage").is_err());
    }
}

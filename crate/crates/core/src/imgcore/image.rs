use crate::error::{CoreError, Result};

/// 2D scalar intensity raster with a declared bit depth (8 or 16).
///
/// Values are stored as `u16` in row-major order; every value is < 2^depth.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GrayImage {
    width: u32,
    height: u32,
    depth: u8,
    data: Vec<u16>,
}

impl GrayImage {
    pub fn new(width: u32, height: u32, depth: u8, data: Vec<u16>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(CoreError::InvalidInput("image dimensions must be >= 1".into()));
        }
        if depth != 8 && depth != 16 {
            return Err(CoreError::InvalidParameter(format!("bit depth must be 8 or 16, got {depth}")));
        }
        if data.len() != (width as usize) * (height as usize) {
            return Err(CoreError::DimensionMismatch(format!(
                "data length {} != {}x{}",
                data.len(),
                width,
                height
            )));
        }
        let max = Self::max_value_for(depth);
        if data.iter().any(|&v| v > max) {
            return Err(CoreError::InvalidInput(format!("value exceeds {}-bit range", depth)));
        }
        Ok(Self { width, height, depth, data })
    }

    pub fn zeros(width: u32, height: u32, depth: u8) -> Self {
        Self::filled(width, height, depth, 0)
    }

    pub fn filled(width: u32, height: u32, depth: u8, value: u16) -> Self {
        assert!(width >= 1 && height >= 1);
        assert!(depth == 8 || depth == 16);
        assert!(value <= Self::max_value_for(depth));
        Self { width, height, depth, data: vec![value; (width as usize) * (height as usize)] }
    }

    fn max_value_for(depth: u8) -> u16 {
        if depth == 8 {
            u8::MAX as u16
        } else {
            u16::MAX
        }
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn depth(&self) -> u8 {
        self.depth
    }

    /// Largest representable value for the declared depth (255 or 65535).
    pub fn max_value(&self) -> u16 {
        Self::max_value_for(self.depth)
    }

    /// Number of gray levels `L` (256 or 65536).
    pub fn levels(&self) -> u32 {
        self.max_value() as u32 + 1
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        false // width, height >= 1 by construction
    }

    #[inline]
    pub fn idx(&self, x: u32, y: u32) -> usize {
        debug_assert!(x < self.width && y < self.height);
        (y as usize) * (self.width as usize) + x as usize
    }

    #[inline]
    pub fn get(&self, x: u32, y: u32) -> u16 {
        self.data[self.idx(x, y)]
    }

    #[inline]
    pub fn set(&mut self, x: u32, y: u32, v: u16) {
        debug_assert!(v <= self.max_value());
        let i = self.idx(x, y);
        self.data[i] = v;
    }

    pub fn data(&self) -> &[u16] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [u16] {
        &mut self.data
    }

    pub fn min_max(&self) -> (u16, u16) {
        let mut lo = u16::MAX;
        let mut hi = 0;
        for &v in &self.data {
            lo = lo.min(v);
            hi = hi.max(v);
        }
        (lo, hi)
    }

    /// Mean intensity over the whole image.
    pub fn mean(&self) -> f64 {
        let sum: u64 = self.data.iter().map(|&v| v as u64).sum();
        sum as f64 / self.data.len() as f64
    }

    /// Population standard deviation over the whole image.
    pub fn std_dev(&self) -> f64 {
        let mean = self.mean();
        let ss: f64 = self.data.iter().map(|&v| (v as f64 - mean).powi(2)).sum();
        (ss / self.data.len() as f64).sqrt()
    }

    /// Crop the axis-aligned rectangle `[x0, x0+w) x [y0, y0+h)`.
    pub fn crop(&self, x0: u32, y0: u32, w: u32, h: u32) -> Result<GrayImage> {
        if w == 0 || h == 0 || x0 + w > self.width || y0 + h > self.height {
            return Err(CoreError::InvalidParameter(format!(
                "crop {}x{}+{}+{} outside {}x{} image",
                w, h, x0, y0, self.width, self.height
            )));
        }
        let mut data = Vec::with_capacity((w as usize) * (h as usize));
        for y in y0..y0 + h {
            let row = self.idx(0, y);
            data.extend_from_slice(&self.data[row + x0 as usize..row + (x0 + w) as usize]);
        }
        GrayImage::new(w, h, self.depth, data)
    }
}

/// 2D binary raster; values are 0 or 1, row-major.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BinaryMask {
    width: u32,
    height: u32,
    data: Vec<u8>,
}

impl BinaryMask {
    pub fn new(width: u32, height: u32, data: Vec<u8>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(CoreError::InvalidInput("mask dimensions must be >= 1".into()));
        }
        if data.len() != (width as usize) * (height as usize) {
            return Err(CoreError::DimensionMismatch(format!(
                "data length {} != {}x{}",
                data.len(),
                width,
                height
            )));
        }
        if data.iter().any(|&v| v > 1) {
            return Err(CoreError::InvalidInput("mask values must be 0 or 1".into()));
        }
        Ok(Self { width, height, data })
    }

    pub fn zeros(width: u32, height: u32) -> Self {
        assert!(width >= 1 && height >= 1);
        Self { width, height, data: vec![0; (width as usize) * (height as usize)] }
    }

    pub fn filled(width: u32, height: u32) -> Self {
        assert!(width >= 1 && height >= 1);
        Self { width, height, data: vec![1; (width as usize) * (height as usize)] }
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    #[inline]
    pub fn idx(&self, x: u32, y: u32) -> usize {
        debug_assert!(x < self.width && y < self.height);
        (y as usize) * (self.width as usize) + x as usize
    }

    #[inline]
    pub fn get(&self, x: u32, y: u32) -> bool {
        self.data[self.idx(x, y)] == 1
    }

    #[inline]
    pub fn set(&mut self, x: u32, y: u32, v: bool) {
        let i = self.idx(x, y);
        self.data[i] = v as u8;
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [u8] {
        &mut self.data
    }

    /// Number of foreground pixels.
    pub fn area(&self) -> usize {
        self.data.iter().filter(|&&v| v == 1).count()
    }

    pub fn is_all_zero(&self) -> bool {
        self.data.iter().all(|&v| v == 0)
    }

    pub fn complement(&self) -> BinaryMask {
        let data = self.data.iter().map(|&v| 1 - v).collect();
        BinaryMask { width: self.width, height: self.height, data }
    }

    pub fn and(&self, other: &BinaryMask) -> Result<BinaryMask> {
        self.check_dims(other)?;
        let data = self.data.iter().zip(&other.data).map(|(&a, &b)| a & b).collect();
        Ok(BinaryMask { width: self.width, height: self.height, data })
    }

    pub fn or(&self, other: &BinaryMask) -> Result<BinaryMask> {
        self.check_dims(other)?;
        let data = self.data.iter().zip(&other.data).map(|(&a, &b)| a | b).collect();
        Ok(BinaryMask { width: self.width, height: self.height, data })
    }

    pub fn xor(&self, other: &BinaryMask) -> Result<BinaryMask> {
        self.check_dims(other)?;
        let data = self.data.iter().zip(&other.data).map(|(&a, &b)| a ^ b).collect();
        Ok(BinaryMask { width: self.width, height: self.height, data })
    }

    /// `self` minus `other`.
    pub fn diff(&self, other: &BinaryMask) -> Result<BinaryMask> {
        self.check_dims(other)?;
        let data = self.data.iter().zip(&other.data).map(|(&a, &b)| a & (1 - b)).collect();
        Ok(BinaryMask { width: self.width, height: self.height, data })
    }

    pub fn is_subset_of(&self, other: &BinaryMask) -> bool {
        self.width == other.width
            && self.height == other.height
            && self.data.iter().zip(&other.data).all(|(&a, &b)| a <= b)
    }

    fn check_dims(&self, other: &BinaryMask) -> Result<()> {
        if self.width != other.width || self.height != other.height {
            return Err(CoreError::DimensionMismatch(format!(
                "{}x{} vs {}x{}",
                self.width, self.height, other.width, other.height
            )));
        }
        Ok(())
    }

    /// Bounding box of the foreground as `(x0, y0, w, h)`, or `None` if empty.
    pub fn bounding_box(&self) -> Option<(u32, u32, u32, u32)> {
        let (mut x0, mut y0, mut x1, mut y1) = (u32::MAX, u32::MAX, 0u32, 0u32);
        let mut any = false;
        for y in 0..self.height {
            for x in 0..self.width {
                if self.get(x, y) {
                    any = true;
                    x0 = x0.min(x);
                    y0 = y0.min(y);
                    x1 = x1.max(x);
                    y1 = y1.max(y);
                }
            }
        }
        any.then(|| (x0, y0, x1 - x0 + 1, y1 - y0 + 1))
    }

    pub fn crop(&self, x0: u32, y0: u32, w: u32, h: u32) -> Result<BinaryMask> {
        if w == 0 || h == 0 || x0 + w > self.width || y0 + h > self.height {
            return Err(CoreError::InvalidParameter("crop outside mask".into()));
        }
        let mut data = Vec::with_capacity((w as usize) * (h as usize));
        for y in y0..y0 + h {
            let row = self.idx(0, y);
            data.extend_from_slice(&self.data[row + x0 as usize..row + (x0 + w) as usize]);
        }
        BinaryMask::new(w, h, data)
    }

    /// Paste `small` into a zero mask of size `w x h` at offset `(x0, y0)`.
    pub fn uncrop(small: &BinaryMask, w: u32, h: u32, x0: u32, y0: u32) -> Result<BinaryMask> {
        if x0 + small.width > w || y0 + small.height > h {
            return Err(CoreError::InvalidParameter("paste region outside target".into()));
        }
        let mut out = BinaryMask::zeros(w, h);
        for y in 0..small.height {
            for x in 0..small.width {
                if small.get(x, y) {
                    out.set(x0 + x, y0 + y, true);
                }
            }
        }
        Ok(out)
    }
}

/// Connected-component labeling of a mask: 0 is background, components are
/// labeled 1..=count.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LabelMap {
    width: u32,
    height: u32,
    labels: Vec<u32>,
    count: u32,
}

impl LabelMap {
    pub fn new(width: u32, height: u32, labels: Vec<u32>, count: u32) -> Result<Self> {
        if labels.len() != (width as usize) * (height as usize) {
            return Err(CoreError::DimensionMismatch("label data length".into()));
        }
        if labels.iter().any(|&l| l > count) {
            return Err(CoreError::InvalidInput("label exceeds declared count".into()));
        }
        Ok(Self { width, height, labels, count })
    }

    pub fn zeros(width: u32, height: u32) -> Self {
        Self { width, height, labels: vec![0; (width as usize) * (height as usize)], count: 0 }
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn count(&self) -> u32 {
        self.count
    }

    pub(crate) fn set_count(&mut self, count: u32) {
        self.count = count;
    }

    #[inline]
    pub fn idx(&self, x: u32, y: u32) -> usize {
        debug_assert!(x < self.width && y < self.height);
        (y as usize) * (self.width as usize) + x as usize
    }

    #[inline]
    pub fn get(&self, x: u32, y: u32) -> u32 {
        self.labels[self.idx(x, y)]
    }

    #[inline]
    pub fn set(&mut self, x: u32, y: u32, label: u32) {
        let i = self.idx(x, y);
        self.labels[i] = label;
    }

    pub fn labels(&self) -> &[u32] {
        &self.labels
    }

    pub fn labels_mut(&mut self) -> &mut [u32] {
        &mut self.labels
    }

    /// Binary mask of the pixels carrying `label`.
    pub fn mask_of(&self, label: u32) -> BinaryMask {
        let data = self.labels.iter().map(|&l| (l == label) as u8).collect();
        BinaryMask::new(self.width, self.height, data).expect("consistent dims")
    }

    /// Binary mask of all labeled (nonzero) pixels.
    pub fn foreground(&self) -> BinaryMask {
        let data = self.labels.iter().map(|&l| (l != 0) as u8).collect();
        BinaryMask::new(self.width, self.height, data).expect("consistent dims")
    }
}

/// Footprint shape for morphological operators.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SeKind {
    Disk,
    Square,
    Diamond,
}

/// Centered, symmetric structuring element.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct StructuringElement {
    pub kind: SeKind,
    /// Radius for disk/diamond, half-width for square.
    pub radius: u32,
}

impl StructuringElement {
    pub fn disk(radius: u32) -> Self {
        Self { kind: SeKind::Disk, radius }
    }

    pub fn square(half_width: u32) -> Self {
        Self { kind: SeKind::Square, radius: half_width }
    }

    pub fn diamond(radius: u32) -> Self {
        Self { kind: SeKind::Diamond, radius }
    }

    /// Offsets of the footprint relative to the center, scan order.
    pub fn offsets(&self) -> Vec<(i32, i32)> {
        let r = self.radius as i32;
        let mut out = Vec::new();
        for dy in -r..=r {
            for dx in -r..=r {
                let inside = match self.kind {
                    SeKind::Square => true,
                    SeKind::Diamond => dx.abs() + dy.abs() <= r,
                    SeKind::Disk => dx * dx + dy * dy <= r * r,
                };
                if inside {
                    out.push((dx, dy));
                }
            }
        }
        out
    }

    /// Per-row horizontal runs `(dy, dx_min, dx_max)` of the footprint.
    pub(crate) fn row_runs(&self) -> Vec<(i32, i32, i32)> {
        let r = self.radius as i32;
        let mut runs = Vec::new();
        for dy in -r..=r {
            let half = match self.kind {
                SeKind::Square => r,
                SeKind::Diamond => r - dy.abs(),
                SeKind::Disk => (((r * r - dy * dy) as f64).sqrt().floor()) as i32,
            };
            runs.push((dy, -half, half));
        }
        runs
    }
}

/// Shape descriptors of one labeled component.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ComponentFeatures {
    pub area: usize,
    /// Sub-pixel centroid `(x, y)`.
    pub centroid: (f64, f64),
    /// Moment-based eccentricity in `[0, 1)`; collinear components clamp to 0.999.
    pub eccentricity: f64,
    /// area / bounding-box area, in `(0, 1]`.
    pub extent: f64,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gray_image_invariants() {
        assert!(GrayImage::new(0, 1, 8, vec![]).is_err());
        assert!(GrayImage::new(2, 2, 8, vec![0; 3]).is_err());
        assert!(GrayImage::new(2, 1, 8, vec![256, 0]).is_err());
        assert!(GrayImage::new(2, 1, 12, vec![0, 0]).is_err());
        let img = GrayImage::new(2, 2, 8, vec![1, 2, 3, 4]).unwrap();
        assert_eq!(img.get(1, 1), 4);
        assert_eq!(img.min_max(), (1, 4));
    }

    #[test]
    fn mask_set_ops() {
        let mut a = BinaryMask::zeros(3, 1);
        a.set(0, 0, true);
        a.set(1, 0, true);
        let mut b = BinaryMask::zeros(3, 1);
        b.set(1, 0, true);
        b.set(2, 0, true);
        assert_eq!(a.and(&b).unwrap().area(), 1);
        assert_eq!(a.or(&b).unwrap().area(), 3);
        assert_eq!(a.xor(&b).unwrap().area(), 2);
        assert_eq!(a.diff(&b).unwrap().area(), 1);
        assert!(a.and(&b).unwrap().is_subset_of(&a));
    }

    #[test]
    fn se_footprints() {
        assert_eq!(StructuringElement::square(1).offsets().len(), 9);
        assert_eq!(StructuringElement::diamond(1).offsets().len(), 5);
        assert_eq!(StructuringElement::disk(1).offsets().len(), 5);
        assert_eq!(StructuringElement::disk(2).offsets().len(), 13);
    }

    #[test]
    fn crop_uncrop_roundtrip() {
        let img = GrayImage::new(4, 3, 8, (0..12).map(|v| v as u16).collect()).unwrap();
        let c = img.crop(1, 1, 2, 2).unwrap();
        assert_eq!(c.data(), &[5, 6, 9, 10]);
        let mut m = BinaryMask::zeros(2, 2);
        m.set(0, 0, true);
        let u = BinaryMask::uncrop(&m, 4, 3, 1, 1).unwrap();
        assert!(u.get(1, 1));
        assert_eq!(u.area(), 1);
    }
}

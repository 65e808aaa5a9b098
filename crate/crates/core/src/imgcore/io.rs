//! Image file I/O: single-channel PGM (binary P5) and grayscale PNG, 8 or
//! 16 bits per sample. Masks are stored as 8-bit {0, 255} images and mapped
//! to {0, 1} on load (any nonzero value counts as foreground).

use std::io::{Read, Write};
use std::path::Path;

use image::{DynamicImage, ImageBuffer, Luma};

use super::image::{BinaryMask, GrayImage};
use crate::error::{CoreError, Result};

fn is_pgm(path: &Path) -> bool {
    path.extension().map(|e| e.eq_ignore_ascii_case("pgm")).unwrap_or(false)
}

pub fn load_gray(path: &Path) -> Result<GrayImage> {
    if is_pgm(path) {
        return load_pgm(path);
    }
    let dynimg = image::open(path).map_err(|e| CoreError::Codec(format!("{}: {e}", path.display())))?;
    match dynimg {
        DynamicImage::ImageLuma8(buf) => {
            let (w, h) = buf.dimensions();
            let data = buf.into_raw().into_iter().map(|v| v as u16).collect();
            GrayImage::new(w, h, 8, data)
        }
        DynamicImage::ImageLuma16(buf) => {
            let (w, h) = buf.dimensions();
            GrayImage::new(w, h, 16, buf.into_raw())
        }
        other => {
            let buf = other.into_luma16();
            let (w, h) = buf.dimensions();
            GrayImage::new(w, h, 16, buf.into_raw())
        }
    }
}

pub fn save_gray(img: &GrayImage, path: &Path) -> Result<()> {
    if is_pgm(path) {
        return save_pgm(img, path);
    }
    if img.depth() == 8 {
        let buf: ImageBuffer<Luma<u8>, Vec<u8>> = ImageBuffer::from_raw(
            img.width(),
            img.height(),
            img.data().iter().map(|&v| v as u8).collect(),
        )
        .expect("consistent dims");
        buf.save(path).map_err(|e| CoreError::Codec(format!("{}: {e}", path.display())))
    } else {
        let buf: ImageBuffer<Luma<u16>, Vec<u16>> =
            ImageBuffer::from_raw(img.width(), img.height(), img.data().to_vec())
                .expect("consistent dims");
        buf.save(path).map_err(|e| CoreError::Codec(format!("{}: {e}", path.display())))
    }
}

/// Binary PGM (P5) writer; 16-bit samples are big-endian per the format.
fn save_pgm(img: &GrayImage, path: &Path) -> Result<()> {
    let mut f = std::fs::File::create(path)?;
    let maxval = img.max_value();
    write!(f, "P5\n{} {}\n{}\n", img.width(), img.height(), maxval)?;
    if img.depth() == 8 {
        let bytes: Vec<u8> = img.data().iter().map(|&v| v as u8).collect();
        f.write_all(&bytes)?;
    } else {
        let mut bytes = Vec::with_capacity(img.len() * 2);
        for &v in img.data() {
            bytes.extend_from_slice(&v.to_be_bytes());
        }
        f.write_all(&bytes)?;
    }
    Ok(())
}

fn load_pgm(path: &Path) -> Result<GrayImage> {
    let mut bytes = Vec::new();
    std::fs::File::open(path)?.read_to_end(&mut bytes)?;
    let mut pos = 0usize;
    let mut token = |bytes: &[u8]| -> Result<String> {
        // Skip whitespace and comment lines.
        loop {
            while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
                pos += 1;
            }
            if pos < bytes.len() && bytes[pos] == b'#' {
                while pos < bytes.len() && bytes[pos] != b'\n' {
                    pos += 1;
                }
            } else {
                break;
            }
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return Err(CoreError::Codec(format!("{}: truncated PGM header", path.display())));
        }
        Ok(String::from_utf8_lossy(&bytes[start..pos]).into_owned())
    };
    let magic = token(&bytes)?;
    if magic != "P5" {
        return Err(CoreError::Codec(format!("{}: not a binary PGM", path.display())));
    }
    let width: u32 = token(&bytes)?.parse().map_err(|_| CoreError::Codec("bad width".into()))?;
    let height: u32 = token(&bytes)?.parse().map_err(|_| CoreError::Codec("bad height".into()))?;
    let maxval: u32 = token(&bytes)?.parse().map_err(|_| CoreError::Codec("bad maxval".into()))?;
    pos += 1; // single whitespace after maxval
    let n = (width as usize) * (height as usize);
    if maxval <= 255 {
        if bytes.len() < pos + n {
            return Err(CoreError::Codec("truncated PGM data".into()));
        }
        let data = bytes[pos..pos + n].iter().map(|&b| b as u16).collect();
        GrayImage::new(width, height, 8, data)
    } else {
        if bytes.len() < pos + 2 * n {
            return Err(CoreError::Codec("truncated PGM data".into()));
        }
        let data = bytes[pos..pos + 2 * n]
            .chunks_exact(2)
            .map(|c| u16::from_be_bytes([c[0], c[1]]))
            .collect();
        GrayImage::new(width, height, 16, data)
    }
}

pub fn load_mask(path: &Path) -> Result<BinaryMask> {
    let img = load_gray(path)?;
    let data = img.data().iter().map(|&v| (v != 0) as u8).collect();
    BinaryMask::new(img.width(), img.height(), data)
}

pub fn save_mask(mask: &BinaryMask, path: &Path) -> Result<()> {
    let buf: ImageBuffer<Luma<u8>, Vec<u8>> = ImageBuffer::from_raw(
        mask.width(),
        mask.height(),
        mask.data().iter().map(|&v| v * 255).collect(),
    )
    .expect("consistent dims");
    buf.save(path).map_err(|e| CoreError::Codec(format!("{}: {e}", path.display())))
}

/// Load a 24-bit RGB image (PNG or TIFF) as a color raster.
pub fn load_rgb(path: &Path) -> Result<crate::colony::ColorImage> {
    let dynimg = image::open(path).map_err(|e| CoreError::Codec(format!("{}: {e}", path.display())))?;
    let buf = dynimg.into_rgb8();
    let (w, h) = buf.dimensions();
    let data: Vec<[u8; 3]> = buf.pixels().map(|p| p.0).collect();
    crate::colony::ColorImage::new(w, h, data)
}

pub fn save_rgb(img: &crate::colony::ColorImage, path: &Path) -> Result<()> {
    let mut raw = Vec::with_capacity(img.data().len() * 3);
    for px in img.data() {
        raw.extend_from_slice(px);
    }
    let buf: image::RgbImage =
        ImageBuffer::from_raw(img.width(), img.height(), raw).expect("consistent dims");
    buf.save(path).map_err(|e| CoreError::Codec(format!("{}: {e}", path.display())))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gray_roundtrip_pgm_and_png() {
        let dir = std::env::temp_dir().join("bioimg_io_test");
        std::fs::create_dir_all(&dir).unwrap();
        let img8 = GrayImage::new(3, 2, 8, vec![0, 50, 100, 150, 200, 255]).unwrap();
        let img16 = GrayImage::new(2, 2, 16, vec![0, 300, 40000, 65535]).unwrap();
        for ext in ["pgm", "png"] {
            let p8 = dir.join(format!("a8.{ext}"));
            save_gray(&img8, &p8).unwrap();
            assert_eq!(load_gray(&p8).unwrap(), img8);
            let p16 = dir.join(format!("a16.{ext}"));
            save_gray(&img16, &p16).unwrap();
            assert_eq!(load_gray(&p16).unwrap(), img16);
        }
    }

    #[test]
    fn mask_maps_to_zero_one() {
        let dir = std::env::temp_dir().join("bioimg_io_test");
        std::fs::create_dir_all(&dir).unwrap();
        let mut m = BinaryMask::zeros(4, 1);
        m.set(1, 0, true);
        m.set(3, 0, true);
        let p = dir.join("m.png");
        save_mask(&m, &p).unwrap();
        assert_eq!(load_mask(&p).unwrap(), m);
    }
}

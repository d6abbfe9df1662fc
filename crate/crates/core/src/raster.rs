//! Raster types shared by every stage, plus PNG/PGM I/O and the 0..255
//! rescale used between stages.
//!
//! Intensities are held as `u8` wherever a stage quantizes (I/O and the
//! explicit rescale points); real-valued intermediates use [`FloatImage`].

use std::path::Path;

use image::{DynamicImage, ImageError, ImageFormat, ImageReader};

use crate::error::{Error, Result};

/// Round half-up, the single rounding rule used across the crate.
#[inline]
pub fn round_half_up(x: f64) -> f64 {
    (x + 0.5).floor()
}

/// Round half-up and clamp into the 8-bit range.
#[inline]
pub fn quantize(x: f64) -> u8 {
    round_half_up(x).clamp(0.0, 255.0) as u8
}

fn check_dims(width: usize, height: usize, len: usize) -> Result<()> {
    if width == 0 || height == 0 {
        return Err(Error::InvalidRaster(format!(
            "dimensions must be positive, got {width}x{height}"
        )));
    }
    if width * height != len {
        return Err(Error::InvalidRaster(format!(
            "data length {len} does not match {width}x{height}"
        )));
    }
    Ok(())
}

/// Anything with a width and height; used for geometry checks.
pub trait Raster {
    fn width(&self) -> usize;
    fn height(&self) -> usize;

    fn len(&self) -> usize {
        self.width() * self.height()
    }

    fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Fails with `GeometryMismatch` unless both rasters have the same shape.
pub fn ensure_same_geometry(a: &impl Raster, b: &impl Raster) -> Result<()> {
    if a.width() != b.width() || a.height() != b.height() {
        return Err(Error::GeometryMismatch {
            left_width: a.width(),
            left_height: a.height(),
            right_width: b.width(),
            right_height: b.height(),
        });
    }
    Ok(())
}

macro_rules! impl_raster {
    ($ty:ty) => {
        impl Raster for $ty {
            fn width(&self) -> usize {
                self.width
            }
            fn height(&self) -> usize {
                self.height
            }
        }
    };
}

/// 8-bit grayscale image, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GrayImage {
    width: usize,
    height: usize,
    data: Vec<u8>,
}

impl GrayImage {
    pub fn new(width: usize, height: usize, data: Vec<u8>) -> Result<Self> {
        check_dims(width, height, data.len())?;
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn filled(width: usize, height: usize, value: u8) -> Result<Self> {
        Self::new(width, height, vec![value; width * height])
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> u8) -> Result<Self> {
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Self::new(width, height, data)
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    pub fn into_data(self) -> Vec<u8> {
        self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.data[y * self.width + x]
    }

    pub fn min_max(&self) -> (u8, u8) {
        let min = self.data.iter().copied().min().unwrap_or(0);
        let max = self.data.iter().copied().max().unwrap_or(0);
        (min, max)
    }

    /// 256-bin intensity histogram.
    pub fn histogram(&self) -> [u64; 256] {
        let mut hist = [0u64; 256];
        for &v in &self.data {
            hist[v as usize] += 1;
        }
        hist
    }
}

impl_raster!(GrayImage);

/// Real-valued raster used for intermediates (area-averaged working images,
/// unquantized stage outputs).
#[derive(Debug, Clone, PartialEq)]
pub struct FloatImage {
    width: usize,
    height: usize,
    data: Vec<f64>,
}

impl FloatImage {
    pub fn new(width: usize, height: usize, data: Vec<f64>) -> Result<Self> {
        check_dims(width, height, data.len())?;
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidRaster("non-finite sample".into()));
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.data[y * self.width + x]
    }
}

impl_raster!(FloatImage);

impl From<&GrayImage> for FloatImage {
    fn from(img: &GrayImage) -> Self {
        Self {
            width: img.width,
            height: img.height,
            data: img.data.iter().map(|&v| f64::from(v)).collect(),
        }
    }
}

impl From<&BinaryMask> for FloatImage {
    /// Ones map to 255 so the result lives on the same scale as a `GrayImage`.
    fn from(mask: &BinaryMask) -> Self {
        Self {
            width: mask.width,
            height: mask.height,
            data: mask.data.iter().map(|&b| if b { 255.0 } else { 0.0 }).collect(),
        }
    }
}

/// Binary label raster: `true` is a one-pixel.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryMask {
    width: usize,
    height: usize,
    data: Vec<bool>,
}

impl BinaryMask {
    pub fn new(width: usize, height: usize, data: Vec<bool>) -> Result<Self> {
        check_dims(width, height, data.len())?;
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn empty(width: usize, height: usize) -> Result<Self> {
        Self::new(width, height, vec![false; width * height])
    }

    /// Builds a mask from 0/1 bytes; any other value is rejected.
    pub fn from_bits(width: usize, height: usize, bits: &[u8]) -> Result<Self> {
        let data = bits
            .iter()
            .map(|&b| match b {
                0 => Ok(false),
                1 => Ok(true),
                other => Err(Error::InvalidRaster(format!("mask value {other} is not 0 or 1"))),
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(width, height, data)
    }

    /// Nonzero pixels of a grayscale image become ones.
    pub fn from_nonzero(img: &GrayImage) -> Self {
        Self {
            width: img.width,
            height: img.height,
            data: img.data.iter().map(|&v| v != 0).collect(),
        }
    }

    pub fn data(&self) -> &[bool] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [bool] {
        &mut self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> bool {
        self.data[y * self.width + x]
    }

    pub fn count_ones(&self) -> usize {
        self.data.iter().filter(|&&b| b).count()
    }

    pub fn to_bits(&self) -> Vec<u8> {
        self.data.iter().map(|&b| u8::from(b)).collect()
    }

    /// The mask rendered as 0/255 grayscale.
    pub fn to_gray(&self) -> GrayImage {
        GrayImage {
            width: self.width,
            height: self.height,
            data: self.data.iter().map(|&b| if b { 255 } else { 0 }).collect(),
        }
    }
}

impl_raster!(BinaryMask);

/// 8-bit RGB image, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RgbImage {
    width: usize,
    height: usize,
    data: Vec<[u8; 3]>,
}

impl RgbImage {
    pub fn new(width: usize, height: usize, data: Vec<[u8; 3]>) -> Result<Self> {
        check_dims(width, height, data.len())?;
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn data(&self) -> &[[u8; 3]] {
        &self.data
    }
}

impl_raster!(RgbImage);

/// BT.601 luma with exact half-up rounding (integer arithmetic).
#[inline]
pub fn luma_bt601(r: u8, g: u8, b: u8) -> u8 {
    let sum = 299 * u32::from(r) + 587 * u32::from(g) + 114 * u32::from(b);
    ((sum + 500) / 1000) as u8
}

/// Loads a PNG or binary PGM as 8-bit grayscale. Color inputs are reduced
/// to BT.601 luma; any alpha channel is ignored.
pub fn load_grayscale(path: impl AsRef<Path>) -> Result<GrayImage> {
    let path = path.as_ref();
    if !path.is_file() {
        return Err(Error::FileNotFound(path.to_path_buf()));
    }
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    // Trust the signature, not the extension.
    let format = image::guess_format(&bytes).ok();
    match format {
        Some(ImageFormat::Png) | Some(ImageFormat::Pnm) => {}
        other => {
            return Err(Error::UnsupportedFormat {
                path: path.to_path_buf(),
                reason: match other {
                    Some(f) => format!("{f:?} is not PNG or PGM"),
                    None => "unrecognized file signature".into(),
                },
            })
        }
    }
    let reader = ImageReader::with_format(std::io::Cursor::new(bytes), format.expect("checked above"));
    let decoded = reader.decode().map_err(|e| match e {
        ImageError::Unsupported(u) => Error::UnsupportedFormat {
            path: path.to_path_buf(),
            reason: u.to_string(),
        },
        other => Error::CorruptImage {
            path: path.to_path_buf(),
            reason: other.to_string(),
        },
    })?;
    dynamic_to_gray(decoded).map_err(|reason| Error::UnsupportedFormat {
        path: path.to_path_buf(),
        reason,
    })
}

fn dynamic_to_gray(img: DynamicImage) -> std::result::Result<GrayImage, String> {
    let (w, h) = (img.width() as usize, img.height() as usize);
    let data = match img {
        DynamicImage::ImageLuma8(buf) => buf.into_raw(),
        DynamicImage::ImageLumaA8(buf) => buf.pixels().map(|p| p.0[0]).collect(),
        DynamicImage::ImageRgb8(buf) => buf.pixels().map(|p| luma_bt601(p.0[0], p.0[1], p.0[2])).collect(),
        DynamicImage::ImageRgba8(buf) => buf.pixels().map(|p| luma_bt601(p.0[0], p.0[1], p.0[2])).collect(),
        other => return Err(format!("only 8-bit images are supported, got {:?}", other.color())),
    };
    GrayImage::new(w, h, data).map_err(|e| e.to_string())
}

/// Rasters that can be written as PNG.
pub trait SavePng {
    fn save_png(&self, path: &Path) -> Result<()>;
}

fn write_png(path: &Path, w: usize, h: usize, color: image::ExtendedColorType, bytes: &[u8]) -> Result<()> {
    image::save_buffer_with_format(path, bytes, w as u32, h as u32, color, ImageFormat::Png).map_err(|e| match e {
        ImageError::IoError(io) => Error::io(path, io),
        other => Error::io(path, std::io::Error::other(other.to_string())),
    })
}

impl SavePng for GrayImage {
    fn save_png(&self, path: &Path) -> Result<()> {
        write_png(path, self.width, self.height, image::ExtendedColorType::L8, &self.data)
    }
}

impl SavePng for BinaryMask {
    fn save_png(&self, path: &Path) -> Result<()> {
        self.to_gray().save_png(path)
    }
}

impl SavePng for RgbImage {
    fn save_png(&self, path: &Path) -> Result<()> {
        let bytes: Vec<u8> = self.data.iter().flatten().copied().collect();
        write_png(path, self.width, self.height, image::ExtendedColorType::Rgb8, &bytes)
    }
}

/// Writes any raster as PNG. Masks are stored as 0/255.
pub fn save_image(img: &impl SavePng, path: impl AsRef<Path>) -> Result<()> {
    img.save_png(path.as_ref())
}

/// Linear map of `[min, max]` onto `[0, 255]`, rounded half-up.
/// A constant input maps every pixel to 0.
pub fn rescale_to_255(img: &FloatImage) -> GrayImage {
    let (min, max) = img
        .data
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    let span = max - min;
    let data = if span > 0.0 {
        img.data.iter().map(|&v| quantize(255.0 * (v - min) / span)).collect()
    } else {
        vec![0; img.data.len()]
    };
    GrayImage {
        width: img.width,
        height: img.height,
        data,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn float(data: &[f64]) -> FloatImage {
        FloatImage::new(data.len(), 1, data.to_vec()).unwrap()
    }

    #[test]
    fn rejects_bad_geometry() {
        assert!(GrayImage::new(0, 3, vec![]).is_err());
        assert!(GrayImage::new(2, 2, vec![1, 2, 3]).is_err());
        assert!(BinaryMask::from_bits(2, 1, &[0, 2]).is_err());
    }

    #[test]
    fn luma_weights() {
        assert_eq!(luma_bt601(255, 255, 255), 255);
        assert_eq!(luma_bt601(100, 200, 50), 153);
        assert_eq!(luma_bt601(0, 0, 0), 0);
    }

    #[test]
    fn rescale_examples() {
        assert_eq!(rescale_to_255(&float(&[0.0, 1.0])).data(), &[0, 255]);
        assert_eq!(rescale_to_255(&float(&[5.0, 5.0, 5.0])).data(), &[0, 0, 0]);
        assert_eq!(rescale_to_255(&float(&[2.0, 4.0, 6.0])).data(), &[0, 128, 255]);
    }

    #[test]
    fn mask_to_gray() {
        let m = BinaryMask::from_bits(2, 1, &[0, 1]).unwrap();
        assert_eq!(m.to_gray().data(), &[0, 255]);
    }

    proptest! {
        #[test]
        fn rescale_hits_both_ends(values in proptest::collection::vec(-1e3f64..1e3, 2..64)) {
            let img = float(&values);
            let out = rescale_to_255(&img);
            let (lo, hi) = out.min_max();
            if values.iter().any(|&v| v != values[0]) {
                prop_assert_eq!((lo, hi), (0, 255));
            } else {
                prop_assert_eq!((lo, hi), (0, 0));
            }
        }

        #[test]
        fn rescale_nearly_idempotent(values in proptest::collection::vec(0f64..255.0, 1..64)) {
            let once = rescale_to_255(&float(&values));
            let twice = rescale_to_255(&FloatImage::from(&once));
            for (a, b) in once.data().iter().zip(twice.data()) {
                prop_assert!((i16::from(*a) - i16::from(*b)).abs() <= 1);
            }
        }
    }
}

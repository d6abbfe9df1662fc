//! Synthetic ultrasound-like phantoms with a planted elliptical lesion.
//!
//! Noise comes from a ChaCha8 stream seeded by `PhantomSpec::seed`, so an
//! image is a pure function of its spec on every platform.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::raster::{quantize, BinaryMask, GrayImage};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Ellipse {
    pub cx: f64,
    pub cy: f64,
    /// Semi-axis along the rotated x direction.
    pub a: f64,
    pub b: f64,
    /// Radians, counter-clockwise in image coordinates.
    pub rotation: f64,
}

impl Ellipse {
    /// Pixel centers `(x, y)` satisfying the ellipse inequality.
    pub fn contains(&self, x: f64, y: f64) -> bool {
        let (dx, dy) = (x - self.cx, y - self.cy);
        let (s, c) = self.rotation.sin_cos();
        let u = dx * c + dy * s;
        let v = -dx * s + dy * c;
        (u / self.a).powi(2) + (v / self.b).powi(2) <= 1.0
    }

    /// Half-extents of the axis-aligned bounding box.
    pub fn half_extents(&self) -> (f64, f64) {
        let (s, c) = self.rotation.sin_cos();
        (
            ((self.a * c).powi(2) + (self.b * s).powi(2)).sqrt(),
            ((self.a * s).powi(2) + (self.b * c).powi(2)).sqrt(),
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhantomSpec {
    pub width: usize,
    pub height: usize,
    pub lesion: Ellipse,
    pub lesion_intensity: f64,
    pub background_intensity: f64,
    /// Multiplicative noise: `pixel * (1 + speckle_sigma * n)`.
    pub speckle_sigma: f64,
    /// Gaussian edge softening in pixels; 0 disables it.
    pub blur_sigma: f64,
    pub seed: u64,
}

impl PhantomSpec {
    pub fn validate(&self) -> Result<()> {
        if self.width == 0 || self.height == 0 {
            return Err(Error::InvalidParameter("phantom must have positive size".into()));
        }
        let e = &self.lesion;
        if !(e.a > 0.0 && e.b > 0.0) {
            return Err(Error::InvalidParameter("semi-axes must be positive".into()));
        }
        let (hx, hy) = e.half_extents();
        if e.cx - hx < 0.0 || e.cy - hy < 0.0 || e.cx + hx > (self.width - 1) as f64 || e.cy + hy > (self.height - 1) as f64 {
            return Err(Error::InvalidParameter("lesion ellipse leaves the image".into()));
        }
        let range = 0.0..=255.0;
        if !range.contains(&self.lesion_intensity) || !range.contains(&self.background_intensity) {
            return Err(Error::InvalidParameter("intensities must lie in [0, 255]".into()));
        }
        if self.lesion_intensity >= self.background_intensity {
            return Err(Error::InvalidParameter("lesion must be darker than the background".into()));
        }
        if !(self.speckle_sigma >= 0.0) || !(self.blur_sigma >= 0.0) {
            return Err(Error::InvalidParameter("noise and blur scales must be >= 0".into()));
        }
        Ok(())
    }
}

fn gaussian_kernel(sigma: f64) -> Vec<f64> {
    let radius = (3.0 * sigma).ceil() as isize;
    let mut k: Vec<f64> = (-radius..=radius).map(|i| (-(i * i) as f64 / (2.0 * sigma * sigma)).exp()).collect();
    let total: f64 = k.iter().sum();
    k.iter_mut().for_each(|v| *v /= total);
    k
}

/// Separable Gaussian blur with clamp-to-edge borders.
fn blur(data: &[f64], w: usize, h: usize, sigma: f64) -> Vec<f64> {
    let k = gaussian_kernel(sigma);
    let r = (k.len() / 2) as isize;
    let clamp = |v: isize, n: usize| v.clamp(0, n as isize - 1) as usize;
    let mut tmp = vec![0.0; w * h];
    for y in 0..h {
        for x in 0..w {
            tmp[y * w + x] = k
                .iter()
                .enumerate()
                .map(|(i, kv)| kv * data[y * w + clamp(x as isize + i as isize - r, w)])
                .sum();
        }
    }
    let mut out = vec![0.0; w * h];
    for y in 0..h {
        for x in 0..w {
            out[y * w + x] = k
                .iter()
                .enumerate()
                .map(|(i, kv)| kv * tmp[clamp(y as isize + i as isize - r, h) * w + x])
                .sum();
        }
    }
    out
}

/// Returns the speckled image and its ground-truth lesion mask.
pub fn generate(spec: &PhantomSpec) -> Result<(GrayImage, BinaryMask)> {
    spec.validate()?;
    let (w, h) = (spec.width, spec.height);
    let inside: Vec<bool> = (0..w * h)
        .map(|i| spec.lesion.contains((i % w) as f64, (i / w) as f64))
        .collect();
    let mut clean: Vec<f64> = inside
        .iter()
        .map(|&l| if l { spec.lesion_intensity } else { spec.background_intensity })
        .collect();
    if spec.blur_sigma > 0.0 {
        clean = blur(&clean, w, h, spec.blur_sigma);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let data = clean
        .iter()
        .map(|&v| {
            let n: f64 = StandardNormal.sample(&mut rng);
            quantize(v * (1.0 + spec.speckle_sigma * n))
        })
        .collect();
    Ok((GrayImage::new(w, h, data)?, BinaryMask::new(w, h, inside)?))
}

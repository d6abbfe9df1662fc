//! Speckle suppression and contrast conditioning ahead of segmentation.
//!
//! Stage order: optional intensity adjustment, median filter, optional
//! histogram equalization, then a fixed-level binarization.

use log::debug;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::raster::{quantize, BinaryMask, GrayImage, Raster};

/// Fraction of pixels saturated at each tail by [`intensity_adjust`].
pub const DEFAULT_SATURATION: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PreprocessOptions {
    /// Saturating contrast stretch before the median filter.
    pub intensity_adjust: bool,
    /// Histogram equalization after the median filter.
    pub hist_equalize: bool,
    pub median_window: usize,
    pub median_padding: Padding,
    pub binarize_threshold: f64,
    /// Hand the binary mask (rather than the filtered grayscale) to the
    /// segmenter.
    pub feed_binary_to_segmenter: bool,
}

impl Default for PreprocessOptions {
    fn default() -> Self {
        Self {
            intensity_adjust: false,
            hist_equalize: false,
            median_window: 7,
            median_padding: Padding::Replicate,
            binarize_threshold: 0.2,
            feed_binary_to_segmenter: false,
        }
    }
}

impl PreprocessOptions {
    pub fn validate(&self) -> Result<()> {
        validate_window(self.median_window)?;
        if !(self.binarize_threshold > 0.0 && self.binarize_threshold < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "binarize_threshold must lie in (0, 1), got {}",
                self.binarize_threshold
            )));
        }
        Ok(())
    }

    /// `(T,F)`-style flag notation.
    pub fn flag_label(&self) -> String {
        let tf = |b: bool| if b { 'T' } else { 'F' };
        format!("({},{})", tf(self.intensity_adjust), tf(self.hist_equalize))
    }
}

fn validate_window(window: usize) -> Result<()> {
    if window < 3 || window % 2 == 0 {
        return Err(Error::InvalidWindow(window));
    }
    Ok(())
}

/// How the median window samples outside the image.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Padding {
    #[default]
    Zero,
    /// Nearest edge pixel.
    Replicate,
}

/// Square-window median with zero padding outside the image.
pub fn median_filter(img: &GrayImage, window: usize) -> Result<GrayImage> {
    median_filter_padded(img, window, Padding::Zero)
}

/// Square-window median. Uses a sliding 256-bin histogram per row, so cost
/// is independent of the window area apart from the column updates.
pub fn median_filter_padded(img: &GrayImage, window: usize, padding: Padding) -> Result<GrayImage> {
    validate_window(window)?;
    let (w, h) = (img.width(), img.height());
    let r = (window / 2) as isize;
    let rank = (window * window / 2) as u32;
    let src = img.data();
    let sample = |x: isize, y: isize| -> u8 {
        let inside = x >= 0 && y >= 0 && x < w as isize && y < h as isize;
        match padding {
            _ if inside => src[y as usize * w + x as usize],
            Padding::Zero => 0,
            Padding::Replicate => {
                let (cx, cy) = (x.clamp(0, w as isize - 1), y.clamp(0, h as isize - 1));
                src[cy as usize * w + cx as usize]
            }
        }
    };

    let mut out = Vec::with_capacity(w * h);
    for y in 0..h as isize {
        let mut hist = [0u32; 256];
        for dy in -r..=r {
            for dx in -r..=r {
                hist[sample(dx, y + dy) as usize] += 1;
            }
        }
        for x in 0..w as isize {
            if x > 0 {
                for dy in -r..=r {
                    hist[sample(x - r - 1, y + dy) as usize] -= 1;
                    hist[sample(x + r, y + dy) as usize] += 1;
                }
            }
            let mut seen = 0u32;
            let mut median = 255u8;
            for (v, &count) in hist.iter().enumerate() {
                seen += count;
                if seen > rank {
                    median = v as u8;
                    break;
                }
            }
            out.push(median);
        }
    }
    GrayImage::new(w, h, out)
}

/// Nearest-rank quantile of an ascending-sorted sample: the value at rank
/// `ceil(p * n)`, clamped to `[1, n]`.
pub fn nearest_rank(sorted: &[u8], p: f64) -> u8 {
    let n = sorted.len();
    let rank = ((p * n as f64).ceil() as usize).clamp(1, n);
    sorted[rank - 1]
}

/// Saturating contrast stretch: clamp to the `[frac, 1 - frac]` quantiles
/// and map that range linearly onto `[0, 255]`.
pub fn intensity_adjust(img: &GrayImage, saturate_frac: f64) -> Result<GrayImage> {
    if !(0.0..0.5).contains(&saturate_frac) {
        return Err(Error::InvalidParameter(format!(
            "saturation fraction must lie in [0, 0.5), got {saturate_frac}"
        )));
    }
    let mut sorted = img.data().to_vec();
    sorted.sort_unstable();
    let lo = nearest_rank(&sorted, saturate_frac);
    let hi = nearest_rank(&sorted, 1.0 - saturate_frac);
    let data = if hi > lo {
        let (lo, hi) = (f64::from(lo), f64::from(hi));
        img.data()
            .iter()
            .map(|&v| {
                let v = f64::from(v).clamp(lo, hi);
                quantize(255.0 * (v - lo) / (hi - lo))
            })
            .collect()
    } else {
        // Clamping collapses everything onto one value; constant maps to 0.
        vec![0; img.len()]
    };
    GrayImage::new(img.width(), img.height(), data)
}

/// 256-bin CDF equalization. A constant image is returned unchanged.
pub fn histogram_equalize(img: &GrayImage) -> GrayImage {
    let hist = img.histogram();
    let n = img.len() as u64;
    let mut cdf = [0u64; 256];
    let mut acc = 0;
    for (c, &count) in cdf.iter_mut().zip(hist.iter()) {
        acc += count;
        *c = acc;
    }
    let cdf_min = cdf.iter().copied().find(|&c| c > 0).unwrap_or(0);
    if n == cdf_min {
        return img.clone();
    }
    let denom = (n - cdf_min) as f64;
    let lut: Vec<u8> = cdf
        .iter()
        .map(|&c| quantize(255.0 * c.saturating_sub(cdf_min) as f64 / denom))
        .collect();
    let data = img.data().iter().map(|&v| lut[v as usize]).collect();
    GrayImage::new(img.width(), img.height(), data).expect("same geometry")
}

/// One-pixels are those with `intensity / 255 > threshold`.
pub fn binarize_fixed(img: &GrayImage, threshold: f64) -> Result<BinaryMask> {
    if !(threshold > 0.0 && threshold < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "binarization threshold must lie in (0, 1), got {threshold}"
        )));
    }
    let data = img.data().iter().map(|&v| f64::from(v) / 255.0 > threshold).collect();
    BinaryMask::new(img.width(), img.height(), data)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    IntensityAdjust,
    MedianFilter,
    HistogramEqualize,
    Binarize,
}

#[derive(Debug, Clone)]
pub struct Preprocessed {
    /// Grayscale just before binarization.
    pub filtered: GrayImage,
    pub binary: BinaryMask,
    /// Stages that actually ran, in order.
    pub stages: Vec<Stage>,
}

pub fn preprocess(img: &GrayImage, opts: &PreprocessOptions) -> Result<Preprocessed> {
    opts.validate()?;
    let mut stages = Vec::with_capacity(4);
    let mut current = img.clone();
    if opts.intensity_adjust {
        debug!("preprocess: intensity adjust (saturation {DEFAULT_SATURATION})");
        current = intensity_adjust(&current, DEFAULT_SATURATION)?;
        stages.push(Stage::IntensityAdjust);
    }
    debug!("preprocess: median filter {0}x{0}", opts.median_window);
    current = median_filter_padded(&current, opts.median_window, opts.median_padding)?;
    stages.push(Stage::MedianFilter);
    if opts.hist_equalize {
        debug!("preprocess: histogram equalization");
        current = histogram_equalize(&current);
        stages.push(Stage::HistogramEqualize);
    }
    debug!("preprocess: binarize at {}", opts.binarize_threshold);
    let binary = binarize_fixed(&current, opts.binarize_threshold)?;
    stages.push(Stage::Binarize);
    Ok(Preprocessed {
        filtered: current,
        binary,
        stages,
    })
}

//! Lesion extraction from the segmented images: two-cluster k-means per
//! segment (Otsu when the segment is flat), minimum-contour component
//! selection, then the smallest candidate across segments.

mod contour;
mod kmeans;
mod otsu;

pub use contour::{connected_components, Region};
pub use kmeans::{kmeans_two, sse, TwoMeans, MAX_ITERATIONS};
pub use otsu::{otsu_from_histogram, otsu_threshold};

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::raster::{ensure_same_geometry, rescale_to_255, BinaryMask, FloatImage, GrayImage, Raster};
use crate::spectral::{extract_segment_images, SegmentLabels};

/// Which intensity cluster is taken as the lesion.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Polarity {
    /// Hypoechoic lesions: the low-intensity cluster.
    #[default]
    Dark,
    Bright,
}

/// Which preprocessed image the segment masks cut up for classification.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LesionSource {
    /// The binarized image, as 0/255.
    #[default]
    Binary,
    /// The grayscale image before binarization.
    Filtered,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PostprocessOptions {
    pub polarity: Polarity,
    pub source: LesionSource,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Classified {
    pub mask: BinaryMask,
    pub fallback_used: bool,
}

/// Classifies a segment image whose support is its nonzero pixels.
pub fn classify_segment(segimg: &GrayImage) -> Classified {
    classify_segment_in(segimg, &BinaryMask::from_nonzero(segimg), Polarity::Dark)
}

/// Two-cluster k-means over the support pixels; the lesion-side cluster
/// becomes the mask. A flat support falls back to Otsu on the whole segment
/// image, keeping the support pixels strictly on the lesion side of the
/// level.
pub fn classify_segment_in(segimg: &GrayImage, support: &BinaryMask, polarity: Polarity) -> Classified {
    let mut mask = BinaryMask::empty(segimg.width(), segimg.height()).expect("valid geometry");
    let idx: Vec<usize> = (0..support.len()).filter(|&i| support.data()[i]).collect();
    if idx.is_empty() {
        return Classified {
            mask,
            fallback_used: false,
        };
    }
    let values: Vec<f64> = idx.iter().map(|&i| f64::from(segimg.data()[i])).collect();
    let km = kmeans_two(&values);
    if !km.single_cluster {
        let wanted = match polarity {
            Polarity::Dark => 0,
            Polarity::Bright => 1,
        };
        for (&i, &l) in idx.iter().zip(&km.labels) {
            mask.data_mut()[i] = l == wanted;
        }
        return Classified {
            mask,
            fallback_used: false,
        };
    }
    let level = otsu_threshold(segimg);
    for &i in &idx {
        let v = segimg.data()[i];
        mask.data_mut()[i] = match polarity {
            Polarity::Dark => v < level,
            Polarity::Bright => v > level,
        };
    }
    Classified {
        mask,
        fallback_used: true,
    }
}

/// Keeps only the component with the shortest exterior boundary (ties:
/// smaller area, then earlier first pixel). Masks with fewer than two
/// components are returned as they are.
pub fn select_min_contour(mask: &BinaryMask) -> BinaryMask {
    let regions = connected_components(mask);
    if regions.len() < 2 {
        return mask.clone();
    }
    let best = regions
        .iter()
        .min_by_key(|r| (r.boundary_length, r.area, r.first_pixel()))
        .expect("at least two regions");
    let mut out = BinaryMask::empty(mask.width(), mask.height()).expect("valid geometry");
    for &p in &best.pixels {
        out.data_mut()[p] = true;
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LesionResult {
    pub mask: BinaryMask,
    /// `None` when every candidate was empty.
    pub source_segment: Option<usize>,
    pub area: usize,
    pub fallback_used: bool,
}

impl LesionResult {
    pub fn is_empty(&self) -> bool {
        self.source_segment.is_none()
    }
}

/// One candidate per segment, before the cross-segment choice.
#[derive(Debug, Clone)]
pub struct Candidate {
    pub segment: usize,
    pub mask: BinaryMask,
    pub area: usize,
    pub fallback_used: bool,
}

/// Per-segment candidates: rescale to 0..255, classify within the segment's
/// pixels, keep the minimum-contour component.
pub fn lesion_candidates(original: &GrayImage, labels: &SegmentLabels, polarity: Polarity) -> Result<Vec<Candidate>> {
    ensure_same_geometry(original, labels)?;
    let images = extract_segment_images(original, labels)?;
    Ok(images
        .iter()
        .enumerate()
        .map(|(segment, img)| {
            let scaled = rescale_to_255(&FloatImage::from(img));
            let classified = classify_segment_in(&scaled, &labels.mask(segment), polarity);
            let mask = select_min_contour(&classified.mask);
            Candidate {
                segment,
                area: mask.count_ones(),
                mask,
                fallback_used: classified.fallback_used,
            }
        })
        .collect())
}

/// The smallest nonempty candidate across segments (ties: lower segment id).
pub fn select_lesion(original: &GrayImage, labels: &SegmentLabels, polarity: Polarity) -> Result<LesionResult> {
    let candidates = lesion_candidates(original, labels, polarity)?;
    let best = candidates
        .into_iter()
        .filter(|c| c.area > 0)
        .min_by_key(|c| (c.area, c.segment));
    Ok(match best {
        Some(c) => LesionResult {
            mask: c.mask,
            source_segment: Some(c.segment),
            area: c.area,
            fallback_used: c.fallback_used,
        },
        None => LesionResult {
            mask: BinaryMask::empty(original.width(), original.height())?,
            source_segment: None,
            area: 0,
            fallback_used: false,
        },
    })
}

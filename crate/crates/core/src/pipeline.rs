//! Preprocess, segment, extract the lesion.

use std::time::Instant;

use log::debug;

use crate::error::Result;
use crate::postprocess::{select_lesion, LesionResult, LesionSource, PostprocessOptions};
use crate::preprocess::{preprocess, PreprocessOptions, Preprocessed};
use crate::raster::{FloatImage, GrayImage};
use crate::spectral::{segment, NcutParams, SegmentLabels};

#[derive(Debug, Clone)]
pub struct PipelineOutput {
    pub preprocessed: Preprocessed,
    pub labels: SegmentLabels,
    pub lesion: LesionResult,
    /// Wall-clock time of the three stages (no I/O).
    pub seconds: f64,
}

/// Runs the three stages on one image. The segmenter sees either the binary
/// mask or the filtered grayscale, and lesion extraction classifies either
/// of the two, per the options.
pub fn run_pipeline(
    img: &GrayImage,
    opts: &PreprocessOptions,
    params: &NcutParams,
    post: &PostprocessOptions,
) -> Result<PipelineOutput> {
    let start = Instant::now();
    let preprocessed = preprocess(img, opts)?;
    let seg_input = if opts.feed_binary_to_segmenter {
        FloatImage::from(&preprocessed.binary)
    } else {
        FloatImage::from(&preprocessed.filtered)
    };
    let labels = segment(&seg_input, params)?;
    debug!("segmentation produced {} regions", labels.k());
    let source = match post.source {
        LesionSource::Binary => preprocessed.binary.to_gray(),
        LesionSource::Filtered => preprocessed.filtered.clone(),
    };
    let lesion = select_lesion(&source, &labels, post.polarity)?;
    let seconds = start.elapsed().as_secs_f64();
    Ok(PipelineOutput {
        preprocessed,
        labels,
        lesion,
        seconds,
    })
}

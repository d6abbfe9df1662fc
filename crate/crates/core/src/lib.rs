//! Lesion segmentation for grayscale ultrasound images.
//!
//! Three stages: speckle-reducing preprocessing ([`preprocess`]),
//! normalized-cuts segmentation ([`spectral`]) and k-means based lesion
//! extraction ([`postprocess`]). [`metrics`] scores a predicted mask
//! against ground truth and [`phantom`] produces ground-truthed test
//! images. The [`cli`] module drives batches from a config file.

pub mod cli;
pub mod error;
pub mod metrics;
pub mod phantom;
pub mod pipeline;
pub mod postprocess;
pub mod preprocess;
pub mod raster;
pub mod spectral;

pub use error::{Error, Result};

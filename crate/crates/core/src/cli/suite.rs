//! Seeded phantom suites: images, ground truths and a ready-to-run config.

use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::config::{Entry, RunConfig, DEFAULT_OUTPUT_DIR};
use crate::error::{Error, Result};
use crate::phantom::{generate, Ellipse, PhantomSpec};
use crate::postprocess::PostprocessOptions;
use crate::preprocess::PreprocessOptions;
use crate::raster::save_image;
use crate::spectral::NcutParams;

pub const SUITE_CONFIG: &str = "suite.toml";
pub const SUITE_SIZE: usize = 256;
pub const SUITE_LESION: f64 = 40.0;
pub const SUITE_BACKGROUND: f64 = 180.0;
pub const SUITE_SPECKLE: f64 = 0.25;
pub const SUITE_BLUR: f64 = 1.5;
/// Semi-axis range in pixels.
pub const SEMI_AXES: std::ops::Range<f64> = 18.0..45.0;
/// Minimum gap between the lesion's bounding box and the image edge.
pub const EDGE_MARGIN: f64 = 8.0;

/// The `index`-th spec of a suite. Geometry: semi-axes uniform in
/// [`SEMI_AXES`], rotation uniform in [0, pi), center uniform over the
/// positions keeping the bounding box [`EDGE_MARGIN`] pixels inside.
pub fn suite_specs(count: usize, seed: u64) -> Vec<PhantomSpec> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let side = SUITE_SIZE as f64 - 1.0;
    (0..count)
        .map(|_| {
            let a = rng.random_range(SEMI_AXES);
            let b = rng.random_range(SEMI_AXES);
            let rotation = rng.random_range(0.0..std::f64::consts::PI);
            let probe = Ellipse {
                cx: 0.0,
                cy: 0.0,
                a,
                b,
                rotation,
            };
            let (hx, hy) = probe.half_extents();
            let cx = rng.random_range(hx + EDGE_MARGIN..side - hx - EDGE_MARGIN);
            let cy = rng.random_range(hy + EDGE_MARGIN..side - hy - EDGE_MARGIN);
            PhantomSpec {
                width: SUITE_SIZE,
                height: SUITE_SIZE,
                lesion: Ellipse { cx, cy, ..probe },
                lesion_intensity: SUITE_LESION,
                background_intensity: SUITE_BACKGROUND,
                speckle_sigma: SUITE_SPECKLE,
                blur_sigma: SUITE_BLUR,
                seed: rng.random(),
            }
        })
        .collect()
}

/// Writes `phantom_NNN.png`, `phantom_NNN_gt.png` and `suite.toml` into
/// `out`. Returns the config path.
pub fn make_phantom_suite(count: usize, seed: u64, out: impl AsRef<Path>) -> Result<PathBuf> {
    if count == 0 {
        return Err(Error::InvalidParameter("phantom count must be at least 1".into()));
    }
    let out = out.as_ref();
    std::fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    let mut entries = Vec::with_capacity(count);
    for (i, spec) in suite_specs(count, seed).into_iter().enumerate() {
        let id = format!("phantom_{i:03}");
        let (img, gt) = generate(&spec)?;
        let image = PathBuf::from(format!("{id}.png"));
        let ground_truth = PathBuf::from(format!("{id}_gt.png"));
        save_image(&img, out.join(&image))?;
        save_image(&gt, out.join(&ground_truth))?;
        entries.push(Entry {
            id,
            image,
            ground_truth,
            adjust: None,
            histeq: None,
            phantom: Some(spec),
        });
    }
    let config = RunConfig {
        output_dir: PathBuf::from(DEFAULT_OUTPUT_DIR),
        overlay: true,
        record_seconds: true,
        preprocess: PreprocessOptions::default(),
        ncut: NcutParams::default(),
        postprocess: PostprocessOptions::default(),
        entries,
    };
    let text = toml::to_string(&config).map_err(|e| Error::InvalidParameter(format!("config serialization: {e}")))?;
    let path = out.join(SUITE_CONFIG);
    std::fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn specs_are_valid_and_seeded() {
        let specs = suite_specs(50, 3);
        for s in &specs {
            s.validate().unwrap();
            let (hx, hy) = s.lesion.half_extents();
            assert!(s.lesion.cx - hx >= EDGE_MARGIN && s.lesion.cy - hy >= EDGE_MARGIN);
        }
        assert_eq!(specs, suite_specs(50, 3));
        assert_ne!(specs, suite_specs(50, 4));
        // a prefix does not depend on the count
        assert_eq!(&specs[..5], &suite_specs(5, 3)[..]);
    }

    #[test]
    fn zero_count_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        assert!(make_phantom_suite(0, 1, dir.path()).is_err());
    }
}

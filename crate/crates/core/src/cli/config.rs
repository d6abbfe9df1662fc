//! TOML run configuration.
//!
//! ```toml
//! output_dir = "results"
//! overlay = true
//! record_seconds = true
//!
//! [preprocess]
//! median_window = 7
//!
//! [ncut]
//! num_regions = 4
//!
//! [postprocess]
//! polarity = "dark"
//!
//! [[entries]]
//! id = "case_01"
//! image = "case_01.png"
//! ground_truth = "case_01_gt.png"
//! adjust = true
//! histeq = false
//! ```
//!
//! Relative paths are resolved against the directory holding the config
//! file. Every table except `entries` may be omitted.

use std::collections::HashSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::phantom::PhantomSpec;
use crate::postprocess::PostprocessOptions;
use crate::preprocess::PreprocessOptions;
use crate::spectral::NcutParams;

pub const DEFAULT_OUTPUT_DIR: &str = "results";
pub const REPORT_FILE: &str = "report.csv";

fn default_output_dir() -> PathBuf {
    PathBuf::from(DEFAULT_OUTPUT_DIR)
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    /// Write `<id>_overlay.png` next to each predicted mask.
    #[serde(default = "yes")]
    pub overlay: bool,
    /// When false the seconds column is written as zero, which makes the
    /// report byte-reproducible.
    #[serde(default = "yes")]
    pub record_seconds: bool,
    #[serde(default)]
    pub preprocess: PreprocessOptions,
    #[serde(default)]
    pub ncut: NcutParams,
    #[serde(default)]
    pub postprocess: PostprocessOptions,
    #[serde(default)]
    pub entries: Vec<Entry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Entry {
    /// Report row name and artifact file prefix.
    pub id: String,
    pub image: PathBuf,
    pub ground_truth: PathBuf,
    /// Overrides `preprocess.intensity_adjust`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub adjust: Option<bool>,
    /// Overrides `preprocess.hist_equalize`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub histeq: Option<bool>,
    /// Generator settings for synthetic entries; informational only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phantom: Option<PhantomSpec>,
}

impl Entry {
    pub fn preprocess_options(&self, base: &PreprocessOptions) -> PreprocessOptions {
        PreprocessOptions {
            intensity_adjust: self.adjust.unwrap_or(base.intensity_adjust),
            hist_equalize: self.histeq.unwrap_or(base.hist_equalize),
            ..*base
        }
    }
}

/// A config whose relative paths are already anchored at its directory.
#[derive(Debug, Clone, PartialEq)]
pub struct LoadedConfig {
    pub source: PathBuf,
    pub config: RunConfig,
}

fn field_error(path: &Path, field: impl Into<String>, message: impl Into<String>) -> Error {
    Error::Config {
        path: path.to_path_buf(),
        line: None,
        column: None,
        field: Some(field.into()),
        message: message.into(),
    }
}

/// 1-based line and column of a byte offset.
fn line_col(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let col = before.len() - before.rfind('\n').map_or(0, |i| i + 1) + 1;
    (line, col)
}

/// Parses config text; `path` is used for diagnostics only.
pub fn parse_config(text: &str, path: &Path) -> Result<RunConfig> {
    let config: RunConfig = toml::from_str(text).map_err(|e| {
        let (line, column) = match e.span() {
            Some(span) => {
                let (l, c) = line_col(text, span.start);
                (Some(l), Some(c))
            }
            None => (None, None),
        };
        Error::Config {
            path: path.to_path_buf(),
            line,
            column,
            field: None,
            message: e.message().to_string(),
        }
    })?;
    validate(&config, path)?;
    Ok(config)
}

fn validate(config: &RunConfig, path: &Path) -> Result<()> {
    if config.entries.is_empty() {
        return Err(field_error(path, "entries", "at least one entry is required"));
    }
    let wrap = |field: &str, e: Error| field_error(path, field, e.to_string());
    config.preprocess.validate().map_err(|e| wrap("preprocess", e))?;
    config.ncut.validate().map_err(|e| wrap("ncut", e))?;
    let mut ids = HashSet::new();
    for (i, entry) in config.entries.iter().enumerate() {
        let field = |name: &str| format!("entries[{i}].{name}");
        if entry.id.is_empty() || entry.id.contains(['/', '\\']) {
            return Err(field_error(path, field("id"), "must be a nonempty file-name-safe string"));
        }
        if !ids.insert(entry.id.as_str()) {
            return Err(field_error(path, field("id"), format!("duplicate id `{}`", entry.id)));
        }
        if entry.image == entry.ground_truth {
            return Err(field_error(path, field("ground_truth"), "must differ from `image`"));
        }
    }
    Ok(())
}

/// Reads and validates a config file, anchoring relative paths at its
/// directory.
pub fn load_config(path: impl AsRef<Path>) -> Result<LoadedConfig> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut config = parse_config(&text, path)?;
    let base = path.parent().unwrap_or(Path::new(""));
    let anchor = |p: &Path| if p.is_absolute() { p.to_path_buf() } else { base.join(p) };
    config.output_dir = anchor(&config.output_dir);
    for entry in &mut config.entries {
        entry.image = anchor(&entry.image);
        entry.ground_truth = anchor(&entry.ground_truth);
    }
    Ok(LoadedConfig {
        source: path.to_path_buf(),
        config,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
[[entries]]
id = "a"
image = "a.png"
ground_truth = "a_gt.png"
adjust = true
"#;

    fn parse(text: &str) -> Result<RunConfig> {
        parse_config(text, Path::new("run.toml"))
    }

    #[test]
    fn minimal_config_takes_defaults() {
        let c = parse(MINIMAL).unwrap();
        assert_eq!(c.output_dir, PathBuf::from("results"));
        assert!(c.overlay && c.record_seconds);
        assert_eq!(c.ncut, NcutParams::default());
        let opts = c.entries[0].preprocess_options(&c.preprocess);
        assert!(opts.intensity_adjust && !opts.hist_equalize);
    }

    #[test]
    fn round_trips_through_toml() {
        let c = parse(MINIMAL).unwrap();
        let text = toml::to_string(&c).unwrap();
        assert_eq!(parse(&text).unwrap(), c);
    }

    #[test]
    fn syntax_errors_carry_a_line() {
        let err = parse("overlay = true\n\n[[entries]]\nid = \n").unwrap_err();
        match err {
            Error::Config { line, .. } => assert_eq!(line, Some(4)),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let err = parse(&format!("{MINIMAL}\nbogus = 1\n")).unwrap_err();
        assert!(err.to_string().contains("bogus"), "{err}");
    }

    #[test]
    fn semantic_errors_name_the_field() {
        let err = parse("overlay = false\n").unwrap_err();
        assert!(matches!(err, Error::Config { field: Some(ref f), .. } if f == "entries"));

        let dup = format!("{MINIMAL}{MINIMAL}");
        let err = parse(&dup).unwrap_err();
        assert!(matches!(err, Error::Config { field: Some(ref f), .. } if f == "entries[1].id"));

        let bad = format!("[ncut]\nradius = 0\n{MINIMAL}");
        let err = parse(&bad).unwrap_err();
        assert!(matches!(err, Error::Config { field: Some(ref f), .. } if f == "ncut"));
    }

    #[test]
    fn line_col_counts_from_one() {
        assert_eq!(line_col("ab\ncd", 0), (1, 1));
        assert_eq!(line_col("ab\ncd", 4), (2, 2));
    }
}

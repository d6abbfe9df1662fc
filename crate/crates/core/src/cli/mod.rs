//! Batch driver behind the `ncut-lesion` binary: config parsing, per-image
//! runs with CSV reporting, and phantom-suite generation.

mod batch;
mod config;
mod suite;

pub use batch::{run_batch, run_image, write_report, BatchSummary, ImageOutcome, ReportRow, CSV_HEADER};
pub use config::{load_config, parse_config, Entry, LoadedConfig, RunConfig, DEFAULT_OUTPUT_DIR, REPORT_FILE};
pub use suite::{
    make_phantom_suite, suite_specs, EDGE_MARGIN, SEMI_AXES, SUITE_BACKGROUND, SUITE_BLUR, SUITE_CONFIG,
    SUITE_LESION, SUITE_SIZE, SUITE_SPECKLE,
};

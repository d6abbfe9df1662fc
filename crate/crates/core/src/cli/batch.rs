//! Per-image execution and the CSV report.

use std::path::{Path, PathBuf};

use log::{info, warn};

use super::config::{Entry, LoadedConfig, RunConfig, REPORT_FILE};
use crate::error::{Error, Result};
use crate::metrics::{aggregate, evaluate, render_overlay, AggregateReport, EvalReport, MetricSummary};
use crate::pipeline::run_pipeline;
use crate::postprocess::LesionResult;
use crate::raster::{ensure_same_geometry, load_grayscale, save_image, BinaryMask};

pub const CSV_HEADER: [&str; 9] = ["image", "adjust", "histeq", "jaccard", "dice", "fpr", "fnr", "seconds", "status"];

#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub image: String,
    pub adjust: bool,
    pub histeq: bool,
    /// `None` when the entry failed.
    pub report: Option<EvalReport>,
    /// `ok` or `error: ...`
    pub status: String,
}

impl ReportRow {
    pub fn is_ok(&self) -> bool {
        self.report.is_some()
    }
}

#[derive(Debug, Clone)]
pub struct ImageOutcome {
    pub row: ReportRow,
    pub lesion: Option<LesionResult>,
    pub artifacts: Vec<PathBuf>,
}

#[derive(Debug, Clone)]
pub struct BatchSummary {
    pub rows: Vec<ReportRow>,
    /// Over `ok` rows only; `None` if there are none.
    pub aggregate: Option<AggregateReport>,
    pub ok_count: usize,
    pub csv_path: PathBuf,
}

impl BatchSummary {
    pub fn all_ok(&self) -> bool {
        self.ok_count == self.rows.len()
    }
}

fn load_mask(path: &Path) -> Result<BinaryMask> {
    Ok(BinaryMask::from_nonzero(&load_grayscale(path)?))
}

fn try_run_image(entry: &Entry, config: &RunConfig) -> Result<(LesionResult, EvalReport, Vec<PathBuf>)> {
    let img = load_grayscale(&entry.image)?;
    let gt = load_mask(&entry.ground_truth)?;
    ensure_same_geometry(&img, &gt)?;
    if gt.count_ones() == 0 {
        return Err(Error::EmptyGroundTruth);
    }
    let opts = entry.preprocess_options(&config.preprocess);
    let out = run_pipeline(&img, &opts, &config.ncut, &config.postprocess)?;
    let mut report = evaluate(&out.lesion.mask, &gt)?;
    report.seconds = if config.record_seconds { out.seconds } else { 0.0 };

    std::fs::create_dir_all(&config.output_dir).map_err(|e| Error::io(&config.output_dir, e))?;
    let mask_path = config.output_dir.join(format!("{}_mask.png", entry.id));
    save_image(&out.lesion.mask, &mask_path)?;
    let mut artifacts = vec![mask_path];
    if config.overlay {
        let path = config.output_dir.join(format!("{}_overlay.png", entry.id));
        save_image(&render_overlay(&out.lesion.mask, &gt, &img)?, &path)?;
        artifacts.push(path);
    }
    Ok((out.lesion, report, artifacts))
}

/// Runs one entry end to end. Failures become an error row rather than an
/// `Err`, so a batch always completes.
pub fn run_image(entry: &Entry, config: &RunConfig) -> ImageOutcome {
    let opts = entry.preprocess_options(&config.preprocess);
    let mut row = ReportRow {
        image: entry.id.clone(),
        adjust: opts.intensity_adjust,
        histeq: opts.hist_equalize,
        report: None,
        status: String::new(),
    };
    match try_run_image(entry, config) {
        Ok((lesion, report, artifacts)) => {
            info!("{}{}: dice {:.4}", entry.id, opts.flag_label(), report.dice);
            row.report = Some(report);
            row.status = "ok".into();
            ImageOutcome {
                row,
                lesion: Some(lesion),
                artifacts,
            }
        }
        Err(e) => {
            warn!("{}: {e}", entry.id);
            row.status = format!("error: {e}");
            ImageOutcome {
                row,
                lesion: None,
                artifacts: Vec::new(),
            }
        }
    }
}

fn tf(b: bool) -> &'static str {
    if b {
        "T"
    } else {
        "F"
    }
}

fn num(v: f64) -> String {
    format!("{v:.4}")
}

fn summary_record(name: &str, s: Option<&MetricSummary>, ok: usize) -> Vec<String> {
    let mut rec = vec![name.to_string(), String::new(), String::new()];
    match s {
        Some(s) => rec.extend([s.jaccard, s.dice, s.fpr, s.fnr, s.seconds].map(num)),
        None => rec.extend(std::iter::repeat_n(String::new(), 5)),
    }
    rec.push(format!("ok={ok}"));
    rec
}

/// Writes the report: one row per entry, then `mean` and `stddev` rows over
/// the ok entries.
pub fn write_report(path: &Path, rows: &[ReportRow], agg: Option<&AggregateReport>) -> Result<()> {
    let ok = rows.iter().filter(|r| r.is_ok()).count();
    let csv_err = |e: csv::Error| Error::io(path, std::io::Error::other(e));
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    w.write_record(CSV_HEADER).map_err(csv_err)?;
    for row in rows {
        let mut rec = vec![row.image.clone(), tf(row.adjust).into(), tf(row.histeq).into()];
        match &row.report {
            Some(r) => rec.extend([r.jaccard, r.dice, r.fpr, r.fnr, r.seconds].map(num)),
            None => rec.extend(std::iter::repeat_n(String::new(), 5)),
        }
        rec.push(row.status.clone());
        w.write_record(&rec).map_err(csv_err)?;
    }
    w.write_record(summary_record("mean", agg.map(|a| &a.mean), ok)).map_err(csv_err)?;
    w.write_record(summary_record("stddev", agg.map(|a| &a.stddev), ok)).map_err(csv_err)?;
    w.flush().map_err(|e| Error::io(path, e))
}

/// Runs every entry in order and writes `report.csv` into the output
/// directory.
pub fn run_batch(loaded: &LoadedConfig) -> Result<BatchSummary> {
    let config = &loaded.config;
    std::fs::create_dir_all(&config.output_dir).map_err(|e| Error::io(&config.output_dir, e))?;
    let rows: Vec<ReportRow> = config.entries.iter().map(|e| run_image(e, config).row).collect();
    let ok: Vec<EvalReport> = rows.iter().filter_map(|r| r.report).collect();
    let agg = if ok.is_empty() { None } else { Some(aggregate(&ok)?) };
    let csv_path = config.output_dir.join(REPORT_FILE);
    write_report(&csv_path, &rows, agg.as_ref())?;
    Ok(BatchSummary {
        ok_count: ok.len(),
        rows,
        aggregate: agg,
        csv_path,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn report(j: f64) -> EvalReport {
        EvalReport {
            jaccard: j,
            dice: 2.0 * j / (1.0 + j),
            fpr: 0.125,
            fnr: 1.0 - j,
            tp: 1,
            fp: 0,
            fn_: 0,
            seconds: 2.5,
        }
    }

    #[test]
    fn report_layout() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("r.csv");
        let rows = vec![
            ReportRow {
                image: "a".into(),
                adjust: true,
                histeq: false,
                report: Some(report(0.5)),
                status: "ok".into(),
            },
            ReportRow {
                image: "b".into(),
                adjust: false,
                histeq: false,
                report: None,
                status: "error: file not found, x".into(),
            },
        ];
        let agg = aggregate(&[report(0.5)]).unwrap();
        write_report(&path, &rows, Some(&agg)).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "image,adjust,histeq,jaccard,dice,fpr,fnr,seconds,status");
        assert_eq!(lines[1], "a,T,F,0.5000,0.6667,0.1250,0.5000,2.5000,ok");
        assert_eq!(lines[2], "b,F,F,,,,,,\"error: file not found, x\"");
        assert_eq!(lines[3], "mean,,,0.5000,0.6667,0.1250,0.5000,2.5000,ok=1");
        assert_eq!(lines[4], "stddev,,,0.0000,0.0000,0.0000,0.0000,0.0000,ok=1");
    }
}

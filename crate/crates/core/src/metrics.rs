//! Pixelwise overlap scores against a ground-truth mask, the TP/FP/FN
//! overlay, and mean/standard-deviation aggregation.
//!
//! FPR and FNR are both normalized by the ground-truth size, so FPR may
//! exceed 1.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::raster::{ensure_same_geometry, BinaryMask, GrayImage, Raster, RgbImage};

pub const TRUE_POSITIVE: [u8; 3] = [255, 255, 255];
pub const FALSE_POSITIVE: [u8; 3] = [0, 255, 0];
pub const FALSE_NEGATIVE: [u8; 3] = [255, 0, 0];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub jaccard: f64,
    pub dice: f64,
    /// `fp / |gt|`
    pub fpr: f64,
    /// `fn / |gt|`
    pub fnr: f64,
    pub tp: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
    /// Wall-clock pipeline time, filled in by the caller.
    pub seconds: f64,
}

pub fn evaluate(pred: &BinaryMask, gt: &BinaryMask) -> Result<EvalReport> {
    ensure_same_geometry(pred, gt)?;
    let (mut tp, mut fp, mut fn_) = (0u64, 0u64, 0u64);
    for (&p, &g) in pred.data().iter().zip(gt.data()) {
        match (p, g) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, true) => fn_ += 1,
            (false, false) => {}
        }
    }
    let gt_size = tp + fn_;
    if gt_size == 0 {
        return Err(Error::EmptyGroundTruth);
    }
    let (tpf, fpf, fnf, gtf) = (tp as f64, fp as f64, fn_ as f64, gt_size as f64);
    Ok(EvalReport {
        jaccard: tpf / (tpf + fpf + fnf),
        dice: 2.0 * tpf / (2.0 * tpf + fpf + fnf),
        fpr: fpf / gtf,
        fnr: fnf / gtf,
        tp,
        fp,
        fn_,
        seconds: 0.0,
    })
}

/// White for TP, green for FP, red for FN, grayscale background elsewhere.
/// The background is capped at 254 so pure white always means TP.
pub fn render_overlay(pred: &BinaryMask, gt: &BinaryMask, background: &GrayImage) -> Result<RgbImage> {
    ensure_same_geometry(pred, gt)?;
    ensure_same_geometry(pred, background)?;
    let data = pred
        .data()
        .iter()
        .zip(gt.data())
        .zip(background.data())
        .map(|((&p, &g), &v)| match (p, g) {
            (true, true) => TRUE_POSITIVE,
            (true, false) => FALSE_POSITIVE,
            (false, true) => FALSE_NEGATIVE,
            (false, false) => {
                let v = v.min(254);
                [v, v, v]
            }
        })
        .collect();
    RgbImage::new(background.width(), background.height(), data)
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct MetricSummary {
    pub jaccard: f64,
    pub dice: f64,
    pub fpr: f64,
    pub fnr: f64,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AggregateReport {
    pub reports: Vec<EvalReport>,
    pub mean: MetricSummary,
    /// Sample standard deviation (n - 1 denominator; 0 for a single report).
    pub stddev: MetricSummary,
}

fn column(reports: &[EvalReport], f: impl Fn(&EvalReport) -> f64) -> (f64, f64) {
    let n = reports.len() as f64;
    let mean = reports.iter().map(&f).sum::<f64>() / n;
    let sd = if reports.len() > 1 {
        (reports.iter().map(|r| (f(r) - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    } else {
        0.0
    };
    (mean, sd)
}

pub fn aggregate(reports: &[EvalReport]) -> Result<AggregateReport> {
    if reports.is_empty() {
        return Err(Error::EmptyList);
    }
    let (jm, js) = column(reports, |r| r.jaccard);
    let (dm, ds) = column(reports, |r| r.dice);
    let (pm, ps) = column(reports, |r| r.fpr);
    let (nm, ns) = column(reports, |r| r.fnr);
    let (tm, ts) = column(reports, |r| r.seconds);
    Ok(AggregateReport {
        reports: reports.to_vec(),
        mean: MetricSummary {
            jaccard: jm,
            dice: dm,
            fpr: pm,
            fnr: nm,
            seconds: tm,
        },
        stddev: MetricSummary {
            jaccard: js,
            dice: ds,
            fpr: ps,
            fnr: ns,
            seconds: ts,
        },
    })
}

use crate::error::{Error, Result};

use super::graph::{ncut_value, AffinityGraph};

/// Best bipartition found by thresholding an eigenvector.
#[derive(Debug, Clone)]
pub struct Split {
    /// `true` for nodes with eigenvector entry above `threshold`.
    pub partition: Vec<bool>,
    pub ncut: f64,
    pub threshold: f64,
}

/// Scans `num_split_points` evenly spaced thresholds strictly inside the
/// eigenvector's range and keeps the one with the smallest Ncut (earliest
/// threshold on ties). Candidates leaving a side empty are skipped.
pub fn split_by_eigvec(graph: &AffinityGraph, eigvec: &[f64], num_split_points: usize) -> Result<Split> {
    if eigvec.len() != graph.len() {
        return Err(Error::InvalidParameter(format!(
            "eigenvector has {} entries for {} nodes",
            eigvec.len(),
            graph.len()
        )));
    }
    if num_split_points == 0 {
        return Err(Error::InvalidParameter("need at least one splitting point".into()));
    }
    let (lo, hi) = eigvec
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    if !(hi > lo) {
        return Err(Error::NoValidSplit);
    }
    let mut best: Option<Split> = None;
    for step in 1..=num_split_points {
        let t = lo + (hi - lo) * step as f64 / (num_split_points + 1) as f64;
        let partition: Vec<bool> = eigvec.iter().map(|&v| v > t).collect();
        let ncut = match ncut_value(graph, &partition) {
            Ok(v) => v,
            Err(Error::EmptySide | Error::ZeroAssociation) => continue,
            Err(e) => return Err(e),
        };
        if best.as_ref().map_or(true, |b| ncut < b.ncut) {
            best = Some(Split {
                partition,
                ncut,
                threshold: t,
            });
        }
    }
    best.ok_or(Error::NoValidSplit)
}

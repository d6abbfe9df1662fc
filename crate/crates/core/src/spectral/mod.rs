//! Normalized-cuts segmentation.
//!
//! The input is area-averaged down to a working resolution, turned into an
//! intensity/spatial affinity graph and recursively bisected (largest
//! region first) with the second generalized eigenvector of
//! `(D - W) x = lambda D x`. Labels are brought back to full resolution by
//! nearest neighbor.

mod eigen;
mod graph;
mod split;

pub use eigen::{residual_inf, second_smallest_generalized_eigvec, solve_second_eigenpair, EigenMethod, Eigenpair, DENSE_LIMIT};
pub use graph::{build_affinity, ncut_value, AffinityGraph};
pub use split::{split_by_eigvec, Split};

use log::debug;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::raster::{ensure_same_geometry, BinaryMask, FloatImage, GrayImage, Raster};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NcutParams {
    /// Intensity scale on the [0, 1] normalized range.
    pub sigma_intensity: f64,
    /// Spatial scale in working-resolution pixels.
    pub sigma_spatial: f64,
    /// Pixels at distance `>= radius` are not connected.
    pub radius: usize,
    pub num_regions: usize,
    pub working_max_side: usize,
    pub eig_tol: f64,
    pub num_split_points: usize,
    /// Splits whose Ncut exceeds this are rejected.
    pub ncut_recursion_threshold: f64,
}

impl Default for NcutParams {
    fn default() -> Self {
        Self {
            sigma_intensity: 0.1,
            sigma_spatial: 4.0,
            radius: 5,
            num_regions: 4,
            working_max_side: 160,
            eig_tol: 1e-6,
            num_split_points: 32,
            ncut_recursion_threshold: 0.5,
        }
    }
}

impl NcutParams {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("sigma_intensity", self.sigma_intensity),
            ("sigma_spatial", self.sigma_spatial),
            ("eig_tol", self.eig_tol),
            ("ncut_recursion_threshold", self.ncut_recursion_threshold),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidParameter(format!("{name} must be positive, got {v}")));
            }
        }
        if self.radius < 1 {
            return Err(Error::InvalidParameter("radius must be >= 1".into()));
        }
        if self.num_regions < 2 {
            return Err(Error::InvalidParameter("num_regions must be >= 2".into()));
        }
        if self.num_split_points < 2 {
            return Err(Error::InvalidParameter("num_split_points must be >= 2".into()));
        }
        if self.working_max_side < 1 {
            return Err(Error::InvalidParameter("working_max_side must be >= 1".into()));
        }
        Ok(())
    }

    /// Regions with fewer working-resolution pixels than this are final.
    pub fn min_split_size(&self) -> usize {
        2 * self.radius * self.radius
    }
}

/// Full-resolution region ids `0..k`, numbered by decreasing pixel count.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SegmentLabels {
    width: usize,
    height: usize,
    labels: Vec<usize>,
    k: usize,
}

impl SegmentLabels {
    /// Validates that ids are contiguous from 0 and each one occurs.
    pub fn new(width: usize, height: usize, labels: Vec<usize>) -> Result<Self> {
        if width == 0 || height == 0 || labels.len() != width * height {
            return Err(Error::InvalidRaster(format!(
                "label raster of length {} does not match {width}x{height}",
                labels.len()
            )));
        }
        let k = labels.iter().copied().max().map_or(0, |m| m + 1);
        let mut seen = vec![false; k];
        labels.iter().for_each(|&l| seen[l] = true);
        if seen.iter().any(|s| !s) {
            return Err(Error::InvalidRaster("label ids are not contiguous".into()));
        }
        Ok(Self {
            width,
            height,
            labels,
            k,
        })
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn mask(&self, id: usize) -> BinaryMask {
        BinaryMask::new(self.width, self.height, self.labels.iter().map(|&l| l == id).collect())
            .expect("geometry already validated")
    }

    pub fn counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.k];
        self.labels.iter().for_each(|&l| counts[l] += 1);
        counts
    }

    /// Renames ids so that `new = perm[old]`.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        if perm.len() != self.k {
            return Err(Error::InvalidParameter("permutation length differs from k".into()));
        }
        Self::new(self.width, self.height, self.labels.iter().map(|&l| perm[l]).collect())
    }
}

impl Raster for SegmentLabels {
    fn width(&self) -> usize {
        self.width
    }
    fn height(&self) -> usize {
        self.height
    }
}

/// One accepted bisection, recorded in working-resolution node ids.
#[derive(Debug, Clone)]
pub struct SplitRecord {
    pub nodes: Vec<usize>,
    pub partition: Vec<bool>,
    pub ncut: f64,
    pub eigenvalue: f64,
}

#[derive(Debug, Clone)]
pub struct Segmentation {
    pub labels: SegmentLabels,
    pub working_width: usize,
    pub working_height: usize,
    pub splits: Vec<SplitRecord>,
}

/// Working dimensions: the longer side scaled to `max_side`, never upscaled.
pub fn working_size(width: usize, height: usize, max_side: usize) -> (usize, usize) {
    let longest = width.max(height);
    if longest <= max_side {
        return (width, height);
    }
    let scale = max_side as f64 / longest as f64;
    let w = ((width as f64 * scale).round() as usize).clamp(1, max_side);
    let h = ((height as f64 * scale).round() as usize).clamp(1, max_side);
    (w, h)
}

/// Exact area-weighted box resampling along one axis.
fn area_weights(src: usize, dst: usize) -> Vec<Vec<(usize, f64)>> {
    let ratio = src as f64 / dst as f64;
    (0..dst)
        .map(|o| {
            let (lo, hi) = (o as f64 * ratio, (o + 1) as f64 * ratio);
            let first = lo.floor() as usize;
            let last = (hi.ceil() as usize).min(src);
            (first..last)
                .filter_map(|s| {
                    let overlap = (hi.min((s + 1) as f64) - lo.max(s as f64)) / ratio;
                    (overlap > 0.0).then_some((s, overlap))
                })
                .collect()
        })
        .collect()
}

/// Area-averaged downsample to `(w, h)`.
pub fn downsample_area(img: &FloatImage, w: usize, h: usize) -> FloatImage {
    if (w, h) == (img.width(), img.height()) {
        return img.clone();
    }
    let (sw, sh) = (img.width(), img.height());
    let xw = area_weights(sw, w);
    let yw = area_weights(sh, h);
    let mut rows = vec![0.0; w * sh];
    for y in 0..sh {
        for (x, taps) in xw.iter().enumerate() {
            rows[y * w + x] = taps.iter().map(|&(s, k)| k * img.get(s, y)).sum();
        }
    }
    let mut out = vec![0.0; w * h];
    for (y, taps) in yw.iter().enumerate() {
        for x in 0..w {
            out[y * w + x] = taps.iter().map(|&(s, k)| k * rows[s * w + x]).sum();
        }
    }
    FloatImage::new(w, h, out).expect("finite area averages")
}

/// Nearest-neighbor lookup of the working-resolution index for `full` pixels.
fn nearest_source(full: usize, working: usize) -> Vec<usize> {
    (0..full)
        .map(|x| ((((x as f64 + 0.5) * working as f64) / full as f64).floor() as usize).min(working - 1))
        .collect()
}

/// Normalized-cuts segmentation into at most `num_regions` regions.
pub fn segment(img: &FloatImage, params: &NcutParams) -> Result<SegmentLabels> {
    segment_traced(img, params).map(|s| s.labels)
}

/// Segments a binary mask, treating ones as intensity 255.
pub fn segment_mask(mask: &BinaryMask, params: &NcutParams) -> Result<SegmentLabels> {
    segment(&FloatImage::from(mask), params)
}

pub fn segment_gray(img: &GrayImage, params: &NcutParams) -> Result<SegmentLabels> {
    segment(&FloatImage::from(img), params)
}

/// Like [`segment`], but also returns the working geometry and every
/// accepted split.
pub fn segment_traced(img: &FloatImage, params: &NcutParams) -> Result<Segmentation> {
    params.validate()?;
    let (ww, wh) = working_size(img.width(), img.height(), params.working_max_side);
    let work = downsample_area(img, ww, wh);
    let graph = build_affinity(&work, params);

    let mut regions: Vec<(Vec<usize>, bool)> = vec![((0..graph.len()).collect(), true)];
    let mut splits = Vec::new();
    while regions.len() < params.num_regions {
        // Largest splittable region; earliest wins ties.
        let Some(idx) = regions
            .iter()
            .enumerate()
            .filter(|(_, (_, open))| *open)
            .max_by(|a, b| a.1 .0.len().cmp(&b.1 .0.len()).then(b.0.cmp(&a.0)))
            .map(|(i, _)| i)
        else {
            break;
        };
        match bisect(&graph, &work, &regions[idx].0, params) {
            Some(record) => {
                let (a, b): (Vec<usize>, Vec<usize>) = {
                    let mut a = Vec::new();
                    let mut b = Vec::new();
                    for (&node, &side) in record.nodes.iter().zip(&record.partition) {
                        if side {
                            a.push(node)
                        } else {
                            b.push(node)
                        }
                    }
                    (a, b)
                };
                debug!(
                    "split region of {} nodes into {} + {} (ncut {:.4}, lambda {:.3e})",
                    record.nodes.len(),
                    a.len(),
                    b.len(),
                    record.ncut,
                    record.eigenvalue
                );
                regions[idx] = (a, true);
                regions.push((b, true));
                splits.push(record);
            }
            None => regions[idx].1 = false,
        }
    }

    let mut working_labels = vec![0usize; graph.len()];
    for (id, (nodes, _)) in regions.iter().enumerate() {
        nodes.iter().for_each(|&n| working_labels[n] = id);
    }
    let xs = nearest_source(img.width(), ww);
    let ys = nearest_source(img.height(), wh);
    let mut full = Vec::with_capacity(img.len());
    for &sy in &ys {
        for &sx in &xs {
            full.push(working_labels[sy * ww + sx]);
        }
    }
    let labels = renumber_by_size(img.width(), img.height(), full, regions.len())?;
    Ok(Segmentation {
        labels,
        working_width: ww,
        working_height: wh,
        splits,
    })
}

fn bisect(graph: &AffinityGraph, work: &FloatImage, nodes: &[usize], params: &NcutParams) -> Option<SplitRecord> {
    if nodes.len() < params.min_split_size() {
        return None;
    }
    let first = work.data()[nodes[0]];
    if nodes.iter().all(|&n| work.data()[n] == first) {
        // Uniform intensity: the affinity is purely spatial and any cut is arbitrary.
        return None;
    }
    let sub = graph.subgraph(nodes);
    let pair = match second_smallest_generalized_eigvec(&sub, params.eig_tol) {
        Ok(p) => p,
        Err(e) => {
            debug!("region of {} nodes left whole: {e}", nodes.len());
            return None;
        }
    };
    let split = split_by_eigvec(&sub, &pair.vector, params.num_split_points).ok()?;
    if split.ncut > params.ncut_recursion_threshold {
        debug!("region of {} nodes left whole: ncut {:.4}", nodes.len(), split.ncut);
        return None;
    }
    Some(SplitRecord {
        nodes: nodes.to_vec(),
        partition: split.partition,
        ncut: split.ncut,
        eigenvalue: pair.value,
    })
}

/// Renumbers so that ids run by decreasing pixel count, ties by first
/// occurrence. Ids that no longer occur are dropped.
fn renumber_by_size(width: usize, height: usize, labels: Vec<usize>, k: usize) -> Result<SegmentLabels> {
    let mut counts = vec![0usize; k];
    let mut first = vec![usize::MAX; k];
    for (i, &l) in labels.iter().enumerate() {
        counts[l] += 1;
        first[l] = first[l].min(i);
    }
    let mut order: Vec<usize> = (0..k).filter(|&l| counts[l] > 0).collect();
    order.sort_by(|&a, &b| counts[b].cmp(&counts[a]).then(first[a].cmp(&first[b])));
    let mut map = vec![0; k];
    for (new, &old) in order.iter().enumerate() {
        map[old] = new;
    }
    SegmentLabels::new(width, height, labels.into_iter().map(|l| map[l]).collect())
}

/// One image per region: the original where the label matches, 0 elsewhere.
pub fn extract_segment_images(original: &GrayImage, labels: &SegmentLabels) -> Result<Vec<GrayImage>> {
    ensure_same_geometry(original, labels)?;
    (0..labels.k())
        .map(|id| {
            let data = original
                .data()
                .iter()
                .zip(labels.labels())
                .map(|(&v, &l)| if l == id { v } else { 0 })
                .collect();
            GrayImage::new(original.width(), original.height(), data)
        })
        .collect()
}

//! Sparse pixel-affinity graph and the normalized-cut criterion.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::raster::{FloatImage, Raster};

use super::NcutParams;

/// Symmetric nonnegative affinity matrix `W` in CSR form, with its degree
/// vector `d_i = sum_j W_ij`.
#[derive(Debug, Clone)]
pub struct AffinityGraph {
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    weights: Vec<f64>,
    degrees: Vec<f64>,
}

impl AffinityGraph {
    fn from_rows(rows: Vec<Vec<(usize, f64)>>) -> Self {
        let mut row_ptr = Vec::with_capacity(rows.len() + 1);
        let nnz = rows.iter().map(Vec::len).sum();
        let mut cols = Vec::with_capacity(nnz);
        let mut weights = Vec::with_capacity(nnz);
        let mut degrees = Vec::with_capacity(rows.len());
        row_ptr.push(0);
        for row in rows {
            let mut d = 0.0;
            for (j, w) in row {
                cols.push(j);
                weights.push(w);
                d += w;
            }
            degrees.push(d);
            row_ptr.push(cols.len());
        }
        Self {
            row_ptr,
            cols,
            weights,
            degrees,
        }
    }

    /// Builds a graph from undirected weighted edges. Each `(i, j, w)` adds
    /// `w` to both `W_ij` and `W_ji` (once when `i == j`); repeated edges
    /// accumulate.
    pub fn from_edges(n: usize, edges: &[(usize, usize, f64)]) -> Result<Self> {
        let mut rows: Vec<BTreeMap<usize, f64>> = vec![BTreeMap::new(); n];
        for &(i, j, w) in edges {
            if i >= n || j >= n {
                return Err(Error::InvalidParameter(format!("edge ({i},{j}) out of range for {n} nodes")));
            }
            if !(w >= 0.0 && w.is_finite()) {
                return Err(Error::InvalidParameter(format!("edge weight {w} must be finite and >= 0")));
            }
            *rows[i].entry(j).or_insert(0.0) += w;
            if i != j {
                *rows[j].entry(i).or_insert(0.0) += w;
            }
        }
        Ok(Self::from_rows(rows.into_iter().map(|r| r.into_iter().collect()).collect()))
    }

    /// Builds a graph from a dense row-major `n x n` matrix, which must be
    /// symmetric and nonnegative. Zero entries are not stored.
    pub fn from_dense(n: usize, w: &[f64]) -> Result<Self> {
        if w.len() != n * n {
            return Err(Error::InvalidParameter(format!("dense matrix has {} entries, expected {}", w.len(), n * n)));
        }
        let mut rows = Vec::with_capacity(n);
        for i in 0..n {
            let mut row = Vec::new();
            for j in 0..n {
                let v = w[i * n + j];
                if !(v >= 0.0 && v.is_finite()) || v != w[j * n + i] {
                    return Err(Error::InvalidParameter(format!("entry ({i},{j}) breaks symmetry or sign")));
                }
                if v > 0.0 {
                    row.push((j, v));
                }
            }
            rows.push(row);
        }
        Ok(Self::from_rows(rows))
    }

    pub fn len(&self) -> usize {
        self.degrees.len()
    }

    pub fn is_empty(&self) -> bool {
        self.degrees.is_empty()
    }

    pub fn nnz(&self) -> usize {
        self.cols.len()
    }

    pub fn degrees(&self) -> &[f64] {
        &self.degrees
    }

    /// Stored `(column, weight)` entries of row `i`.
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let span = self.row_ptr[i]..self.row_ptr[i + 1];
        self.cols[span.clone()].iter().copied().zip(self.weights[span].iter().copied())
    }

    /// `W_ij`, zero when not stored.
    pub fn weight(&self, i: usize, j: usize) -> f64 {
        let span = self.row_ptr[i]..self.row_ptr[i + 1];
        match self.cols[span.clone()].binary_search(&j) {
            Ok(pos) => self.weights[span.start + pos],
            Err(_) => 0.0,
        }
    }

    /// `out = W x`.
    pub fn mul_weights(&self, x: &[f64], out: &mut [f64]) {
        for (i, o) in out.iter_mut().enumerate() {
            let span = self.row_ptr[i]..self.row_ptr[i + 1];
            *o = self.cols[span.clone()]
                .iter()
                .zip(&self.weights[span])
                .map(|(&j, &w)| w * x[j])
                .sum();
        }
    }

    /// Induced subgraph on `nodes` (in the given order), degrees recomputed
    /// within the subgraph.
    pub fn subgraph(&self, nodes: &[usize]) -> Self {
        let mut local = vec![usize::MAX; self.len()];
        for (new, &old) in nodes.iter().enumerate() {
            local[old] = new;
        }
        let rows = nodes
            .iter()
            .map(|&old| {
                let mut row: Vec<(usize, f64)> = self
                    .row(old)
                    .filter_map(|(j, w)| (local[j] != usize::MAX).then(|| (local[j], w)))
                    .collect();
                row.sort_unstable_by_key(|&(j, _)| j);
                row
            })
            .collect();
        Self::from_rows(rows)
    }
}

/// Sorted column offsets `(dx, dy)` with `dx^2 + dy^2 < radius^2`.
fn neighborhood(radius: usize) -> Vec<(isize, isize)> {
    let r = radius as isize;
    let mut offsets = Vec::new();
    for dy in -r..=r {
        for dx in -r..=r {
            if dx * dx + dy * dy < r * r {
                offsets.push((dx, dy));
            }
        }
    }
    offsets
}

/// Intensity-times-spatial Gaussian affinity between pixels closer than
/// `radius`. Intensities are taken on the 0..255 scale and normalized to
/// [0, 1]; self-affinity is 1.
pub fn build_affinity(img: &FloatImage, params: &NcutParams) -> AffinityGraph {
    let (w, h) = (img.width(), img.height());
    let offsets = neighborhood(params.radius);
    let inv_si2 = 1.0 / (params.sigma_intensity * params.sigma_intensity);
    let inv_sx2 = 1.0 / (params.sigma_spatial * params.sigma_spatial);
    let feature: Vec<f64> = img.data().iter().map(|v| v / 255.0).collect();

    let mut rows = Vec::with_capacity(w * h);
    for y in 0..h as isize {
        for x in 0..w as isize {
            let i = y as usize * w + x as usize;
            let mut row = Vec::with_capacity(offsets.len());
            for &(dx, dy) in &offsets {
                let (nx, ny) = (x + dx, y + dy);
                if nx < 0 || ny < 0 || nx >= w as isize || ny >= h as isize {
                    continue;
                }
                let j = ny as usize * w + nx as usize;
                let df = feature[i] - feature[j];
                let dist2 = (dx * dx + dy * dy) as f64;
                row.push((j, (-df * df * inv_si2).exp() * (-dist2 * inv_sx2).exp()));
            }
            rows.push(row);
        }
    }
    AffinityGraph::from_rows(rows)
}

/// `Ncut(A, B) = cut(A, B) / assoc(A, V) + cut(A, B) / assoc(B, V)`, with
/// `A` the nodes flagged `true`.
pub fn ncut_value(graph: &AffinityGraph, partition: &[bool]) -> Result<f64> {
    if partition.len() != graph.len() {
        return Err(Error::InvalidParameter(format!(
            "partition has {} entries for {} nodes",
            partition.len(),
            graph.len()
        )));
    }
    let in_a = partition.iter().filter(|&&p| p).count();
    if in_a == 0 || in_a == partition.len() {
        return Err(Error::EmptySide);
    }
    let mut cut = 0.0;
    let (mut assoc_a, mut assoc_b) = (0.0, 0.0);
    for (i, &side) in partition.iter().enumerate() {
        if side {
            assoc_a += graph.degrees[i];
            cut += graph.row(i).filter(|&(j, _)| !partition[j]).map(|(_, w)| w).sum::<f64>();
        } else {
            assoc_b += graph.degrees[i];
        }
    }
    if assoc_a <= 0.0 || assoc_b <= 0.0 {
        return Err(Error::ZeroAssociation);
    }
    Ok(cut * (1.0 / assoc_a + 1.0 / assoc_b))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn params() -> NcutParams {
        NcutParams::default()
    }

    #[test]
    fn adjacent_equal_pixels() {
        let img = FloatImage::new(2, 1, vec![100.0, 100.0]).unwrap();
        let g = build_affinity(&img, &params());
        let expected = (-1.0f64 / 16.0).exp();
        assert!((g.weight(0, 1) - expected).abs() < 1e-15);
        assert_eq!(g.weight(0, 0), 1.0);
    }

    #[test]
    fn far_pixels_have_no_edge() {
        let img = FloatImage::new(7, 1, vec![10.0; 7]).unwrap();
        let g = build_affinity(&img, &params());
        assert_eq!(g.weight(0, 5), 0.0);
        assert!(g.weight(0, 4) > 0.0);
    }

    #[test]
    fn dense_oracle_3x3() {
        let vals = [12.0, 200.0, 40.0, 90.0, 91.0, 255.0, 0.0, 30.0, 150.0];
        let img = FloatImage::new(3, 3, vals.to_vec()).unwrap();
        let p = params();
        let g = build_affinity(&img, &p);
        for i in 0..9 {
            for j in 0..9 {
                let (xi, yi) = ((i % 3) as f64, (i / 3) as f64);
                let (xj, yj) = ((j % 3) as f64, (j / 3) as f64);
                let d2 = (xi - xj).powi(2) + (yi - yj).powi(2);
                let expected = if d2.sqrt() < p.radius as f64 {
                    let df = (vals[i] - vals[j]) / 255.0;
                    (-df * df / (p.sigma_intensity * p.sigma_intensity)).exp()
                        * (-d2 / (p.sigma_spatial * p.sigma_spatial)).exp()
                } else {
                    0.0
                };
                assert!((g.weight(i, j) - expected).abs() < 1e-15, "({i},{j})");
            }
        }
    }

    #[test]
    fn affinity_is_symmetric_with_consistent_degrees() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let data: Vec<f64> = (0..12 * 9).map(|_| rng.random_range(0.0..255.0)).collect();
        let g = build_affinity(&FloatImage::new(12, 9, data).unwrap(), &params());
        for i in 0..g.len() {
            let mut sum = 0.0;
            for (j, w) in g.row(i) {
                assert!(w >= 0.0);
                assert_eq!(w, g.weight(j, i));
                sum += w;
            }
            assert!((sum - g.degrees()[i]).abs() <= 1e-9 * sum);
        }
    }

    #[test]
    fn two_node_ncut() {
        let w = 0.3;
        let g = AffinityGraph::from_dense(2, &[1.0, w, w, 1.0]).unwrap();
        let v = ncut_value(&g, &[true, false]).unwrap();
        assert!((v - 2.0 * w / (1.0 + w)).abs() < 1e-15);
    }

    #[test]
    fn disconnected_components_cost_nothing() {
        let g = AffinityGraph::from_edges(4, &[(0, 1, 1.0), (2, 3, 2.0)]).unwrap();
        assert_eq!(ncut_value(&g, &[true, true, false, false]).unwrap(), 0.0);
    }

    #[test]
    fn ncut_errors() {
        let g = AffinityGraph::from_edges(3, &[(0, 1, 1.0)]).unwrap();
        assert!(matches!(ncut_value(&g, &[true, true, true]), Err(Error::EmptySide)));
        assert!(matches!(ncut_value(&g, &[true, true, false]), Err(Error::ZeroAssociation)));
    }

    #[test]
    fn subgraph_recomputes_degrees() {
        let g = AffinityGraph::from_edges(3, &[(0, 1, 1.0), (1, 2, 2.0), (0, 0, 1.0)]).unwrap();
        let s = g.subgraph(&[1, 0]);
        assert_eq!(s.degrees(), &[1.0, 2.0]);
        assert_eq!(s.weight(0, 1), 1.0);
    }

    #[test]
    fn from_dense_rejects_asymmetry() {
        assert!(AffinityGraph::from_dense(2, &[0.0, 1.0, 2.0, 0.0]).is_err());
        assert!(AffinityGraph::from_dense(2, &[0.0, -1.0, -1.0, 0.0]).is_err());
    }
}

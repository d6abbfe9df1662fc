//! Independent reference implementations shared by the integration tests.
//! None of these call into the library's numerical code.

#![allow(dead_code)]

use ncut_lesion::raster::{GrayImage, Raster};
use ncut_lesion::spectral::AffinityGraph;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Dense row-major copy of a graph's weights.
pub fn dense_weights(g: &AffinityGraph) -> Vec<f64> {
    let n = g.len();
    let mut w = vec![0.0; n * n];
    for i in 0..n {
        for (j, v) in g.row(i) {
            w[i * n + j] = v;
        }
    }
    w
}

pub fn degrees(w: &[f64], n: usize) -> Vec<f64> {
    (0..n).map(|i| w[i * n..(i + 1) * n].iter().sum()).collect()
}

/// Householder reduction of a symmetric matrix to tridiagonal form
/// `(diagonal, subdiagonal)`.
pub fn tridiagonalize(mut a: Vec<f64>, n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut e = vec![0.0; n.saturating_sub(1)];
    for k in 0..n.saturating_sub(2) {
        let x: Vec<f64> = (k + 1..n).map(|i| a[i * n + k]).collect();
        let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm == 0.0 {
            continue;
        }
        let alpha = if x[0] > 0.0 { -norm } else { norm };
        let mut v = x.clone();
        v[0] -= alpha;
        let vn = v.iter().map(|t| t * t).sum::<f64>().sqrt();
        if vn == 0.0 {
            e[k] = x[0];
            continue;
        }
        v.iter_mut().for_each(|t| *t /= vn);
        let m = n - k - 1;
        // p = A22 v, w = p - (v.p) v, A22 -= 2 (v w' + w v')
        let p: Vec<f64> = (0..m)
            .map(|i| (0..m).map(|j| a[(k + 1 + i) * n + k + 1 + j] * v[j]).sum())
            .collect();
        let vp: f64 = v.iter().zip(&p).map(|(a, b)| a * b).sum();
        let w: Vec<f64> = p.iter().zip(&v).map(|(pi, vi)| pi - vp * vi).collect();
        for i in 0..m {
            for j in 0..m {
                a[(k + 1 + i) * n + k + 1 + j] -= 2.0 * (v[i] * w[j] + w[i] * v[j]);
            }
        }
        e[k] = alpha;
        for i in k + 1..n {
            a[i * n + k] = 0.0;
            a[k * n + i] = 0.0;
        }
    }
    if n >= 2 {
        e[n - 2] = a[(n - 1) * n + n - 2];
    }
    let d = (0..n).map(|i| a[i * n + i]).collect();
    (d, e)
}

/// Number of eigenvalues of the tridiagonal matrix strictly below `x`.
fn sturm_count(d: &[f64], e: &[f64], x: f64) -> usize {
    let mut count = 0;
    let mut q = 1.0;
    for i in 0..d.len() {
        let off = if i == 0 { 0.0 } else { e[i - 1] * e[i - 1] };
        q = d[i] - x - if i == 0 { 0.0 } else { off / q };
        if q == 0.0 {
            q = -f64::EPSILON * (x.abs() + 1.0);
        }
        if q < 0.0 {
            count += 1;
        }
    }
    count
}

/// Full ascending spectrum of a symmetric matrix by Sturm bisection.
pub fn symmetric_spectrum(a: Vec<f64>, n: usize) -> Vec<f64> {
    let (d, e) = tridiagonalize(a, n);
    let radius = |i: usize| {
        (if i > 0 { e[i - 1].abs() } else { 0.0 }) + if i + 1 < n { e[i].abs() } else { 0.0 }
    };
    let lo0 = (0..n).map(|i| d[i] - radius(i)).fold(f64::INFINITY, f64::min) - 1e-9;
    let hi0 = (0..n).map(|i| d[i] + radius(i)).fold(f64::NEG_INFINITY, f64::max) + 1e-9;
    (0..n)
        .map(|k| {
            let (mut lo, mut hi) = (lo0, hi0);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if mid <= lo || mid >= hi {
                    break;
                }
                if sturm_count(&d, &e, mid) > k {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            0.5 * (lo + hi)
        })
        .collect()
}

/// Ascending spectrum of `(D - W) x = lambda D x`.
pub fn generalized_spectrum(w: &[f64], n: usize) -> Vec<f64> {
    let d = degrees(w, n);
    let s: Vec<f64> = d.iter().map(|v| 1.0 / v.sqrt()).collect();
    let mut m = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            let l = if i == j { d[i] - w[i * n + j] } else { -w[i * n + j] };
            m[i * n + j] = s[i] * l * s[j];
        }
    }
    symmetric_spectrum(m, n)
}

/// `||(D - W) x - lambda D x||_inf`.
pub fn generalized_residual(w: &[f64], n: usize, x: &[f64], lambda: f64) -> f64 {
    let d = degrees(w, n);
    (0..n)
        .map(|i| {
            let wx: f64 = (0..n).map(|j| w[i * n + j] * x[j]).sum();
            (d[i] * x[i] - wx - lambda * d[i] * x[i]).abs()
        })
        .fold(0.0, f64::max)
}

/// Ncut by the definition: cut / assoc(A, V) + cut / assoc(B, V).
pub fn brute_ncut(w: &[f64], n: usize, side: &[bool]) -> Option<f64> {
    let (mut cut, mut assoc_a, mut assoc_b) = (0.0, 0.0, 0.0);
    for i in 0..n {
        for j in 0..n {
            let v = w[i * n + j];
            if side[i] {
                assoc_a += v;
            } else {
                assoc_b += v;
            }
            if side[i] && !side[j] {
                cut += v;
            }
        }
    }
    if assoc_a == 0.0 || assoc_b == 0.0 {
        return None;
    }
    Some(cut / assoc_a + cut / assoc_b)
}

/// Exhaustive minimum-Ncut bipartition. Node 0 is pinned to the `false` side
/// to skip mirror images.
pub fn exhaustive_min_ncut(w: &[f64], n: usize) -> (Vec<bool>, f64) {
    let mut best = (Vec::new(), f64::INFINITY);
    for bits in 1u64..(1 << (n - 1)) {
        let side: Vec<bool> = (0..n).map(|i| i > 0 && bits >> (i - 1) & 1 == 1).collect();
        if let Some(v) = brute_ncut(w, n, &side) {
            if v < best.1 {
                best = (side, v);
            }
        }
    }
    best
}

/// Two cliques joined by one bridge, nodes shuffled. Returns the graph, its
/// dense weights and the planted side of each node.
pub fn two_cliques(rng: &mut ChaCha8Rng, size: usize, bridge: f64) -> (AffinityGraph, Vec<f64>, Vec<bool>) {
    let n = 2 * size;
    let mut order: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        order.swap(i, rng.random_range(0..=i));
    }
    let side: Vec<bool> = (0..n).map(|i| order[i] >= size).collect();
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if side[i] == side[j] {
                edges.push((i, j, rng.random_range(0.5..1.0)));
            }
        }
    }
    let a = (0..n).find(|&i| !side[i]).unwrap();
    let b = (0..n).find(|&i| side[i]).unwrap();
    edges.push((a, b, bridge));
    let g = AffinityGraph::from_edges(n, &edges).unwrap();
    let w = dense_weights(&g);
    (g, w, side)
}

/// Sort-and-pick median with zero padding.
pub fn naive_median(img: &GrayImage, window: usize) -> GrayImage {
    let r = (window / 2) as isize;
    let (w, h) = (img.width() as isize, img.height() as isize);
    GrayImage::from_fn(img.width(), img.height(), |x, y| {
        let mut vals = Vec::with_capacity(window * window);
        for dy in -r..=r {
            for dx in -r..=r {
                let (sx, sy) = (x as isize + dx, y as isize + dy);
                let inside = sx >= 0 && sy >= 0 && sx < w && sy < h;
                vals.push(if inside { img.get(sx as usize, sy as usize) } else { 0 });
            }
        }
        vals.sort_unstable();
        vals[vals.len() / 2]
    })
    .unwrap()
}

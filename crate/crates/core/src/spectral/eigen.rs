//! Second-smallest eigenpair of `(D - W) x = lambda D x`.
//!
//! Both solvers work on the symmetric form `N = D^-1/2 (D - W) D^-1/2`,
//! whose trivial eigenvector `D^1/2 1` (eigenvalue 0) is deflated up front,
//! and map the result back with `x = D^-1/2 y`.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

use super::graph::AffinityGraph;

/// Graphs up to this size use the dense solver under [`EigenMethod::Auto`].
pub const DENSE_LIMIT: usize = 400;

const KRYLOV_DIM: usize = 48;
const MAX_RESTARTS: usize = 2_000;
const START_SEED: u64 = 0x5eed_1a9c;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum EigenMethod {
    #[default]
    Auto,
    Dense,
    Lanczos,
}

#[derive(Debug, Clone)]
pub struct Eigenpair {
    /// Generalized eigenvector, unit Euclidean norm, first nonzero entry positive.
    pub vector: Vec<f64>,
    pub value: f64,
    /// `||(D - W) x - lambda D x||_inf / ||x||_inf`.
    pub residual: f64,
    /// Operator applications (0 for the dense path).
    pub iterations: usize,
}

/// Second-smallest generalized eigenpair, choosing the solver by size.
pub fn second_smallest_generalized_eigvec(graph: &AffinityGraph, tol: f64) -> Result<Eigenpair> {
    solve_second_eigenpair(graph, tol, EigenMethod::Auto)
}

pub fn solve_second_eigenpair(graph: &AffinityGraph, tol: f64, method: EigenMethod) -> Result<Eigenpair> {
    let n = graph.len();
    if n < 2 {
        return Err(Error::InvalidParameter(format!("eigenproblem needs at least 2 nodes, got {n}")));
    }
    if graph.degrees().iter().any(|&d| d <= 0.0) {
        return Err(Error::InvalidParameter("every node needs a positive degree".into()));
    }
    let op = NormalizedAffinity::new(graph);
    let dense = match method {
        EigenMethod::Auto => n <= DENSE_LIMIT,
        EigenMethod::Dense => true,
        EigenMethod::Lanczos => false,
    };
    if dense {
        let y = dense_second(&op);
        let pair = finish(graph, &op, &y, 0);
        if pair.residual <= tol {
            Ok(pair)
        } else {
            Err(Error::ConvergenceFailure {
                iterations: 0,
                residual: pair.residual,
            })
        }
    } else {
        lanczos_second(graph, &op, tol)
    }
}

/// `A = D^-1/2 W D^-1/2` together with the deflation vector `D^1/2 1 / ||.||`.
struct NormalizedAffinity<'a> {
    graph: &'a AffinityGraph,
    inv_sqrt_d: Vec<f64>,
    trivial: Vec<f64>,
}

impl<'a> NormalizedAffinity<'a> {
    fn new(graph: &'a AffinityGraph) -> Self {
        let inv_sqrt_d: Vec<f64> = graph.degrees().iter().map(|d| 1.0 / d.sqrt()).collect();
        let mut trivial: Vec<f64> = graph.degrees().iter().map(|d| d.sqrt()).collect();
        normalize(&mut trivial);
        Self {
            graph,
            inv_sqrt_d,
            trivial,
        }
    }

    fn len(&self) -> usize {
        self.inv_sqrt_d.len()
    }

    /// `out = A v`, projected off the trivial vector.
    fn apply(&self, v: &[f64], scratch: &mut [f64], out: &mut [f64]) {
        for ((s, &vi), &k) in scratch.iter_mut().zip(v).zip(&self.inv_sqrt_d) {
            *s = vi * k;
        }
        self.graph.mul_weights(scratch, out);
        for (o, &k) in out.iter_mut().zip(&self.inv_sqrt_d) {
            *o *= k;
        }
        project_out(out, &self.trivial);
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn normalize(a: &mut [f64]) -> f64 {
    let n = norm(a);
    if n > 0.0 {
        a.iter_mut().for_each(|v| *v /= n);
    }
    n
}

fn project_out(v: &mut [f64], unit: &[f64]) {
    let c = dot(v, unit);
    v.iter_mut().zip(unit).for_each(|(x, u)| *x -= c * u);
}

/// Dense route: the trivial mode is shifted above the spectrum (`N` has
/// eigenvalues in [0, 2]) so the smallest eigenpair of the shifted matrix
/// is the wanted one.
fn dense_second(op: &NormalizedAffinity<'_>) -> Vec<f64> {
    let n = op.len();
    let mut m = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        for (j, w) in op.graph.row(i) {
            m[(i, j)] -= w * op.inv_sqrt_d[i] * op.inv_sqrt_d[j];
        }
        m[(i, i)] += 1.0;
    }
    for i in 0..n {
        for j in 0..n {
            m[(i, j)] += 3.0 * op.trivial[i] * op.trivial[j];
        }
    }
    let eig = SymmetricEigen::new(m);
    let best = eig
        .eigenvalues
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i)
        .expect("nonempty spectrum");
    let mut y: Vec<f64> = eig.eigenvectors.column(best).iter().copied().collect();
    project_out(&mut y, &op.trivial);
    normalize(&mut y);
    y
}

/// Maps `y` back to the generalized eigenvector, fixes norm and sign, and
/// measures the true residual.
fn finish(graph: &AffinityGraph, op: &NormalizedAffinity<'_>, y: &[f64], iterations: usize) -> Eigenpair {
    let mut x: Vec<f64> = y.iter().zip(&op.inv_sqrt_d).map(|(v, k)| v * k).collect();
    normalize(&mut x);
    let peak = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if let Some(first) = x.iter().copied().find(|v| v.abs() > 1e-9 * peak) {
        if first < 0.0 {
            x.iter_mut().for_each(|v| *v = -*v);
        }
    }
    let d = graph.degrees();
    let mut wx = vec![0.0; x.len()];
    graph.mul_weights(&x, &mut wx);
    let num: f64 = x.iter().zip(&wx).zip(d).map(|((xi, wxi), di)| xi * (di * xi - wxi)).sum();
    let den: f64 = x.iter().zip(d).map(|(xi, di)| di * xi * xi).sum();
    let value = (num / den).max(0.0);
    let residual = residual_inf(graph, &x, value);
    Eigenpair {
        vector: x,
        value,
        residual,
        iterations,
    }
}

/// `||(D - W) x - lambda D x||_inf / ||x||_inf`.
pub fn residual_inf(graph: &AffinityGraph, x: &[f64], lambda: f64) -> f64 {
    let mut wx = vec![0.0; x.len()];
    graph.mul_weights(x, &mut wx);
    let r = x
        .iter()
        .zip(&wx)
        .zip(graph.degrees())
        .map(|((xi, wxi), di)| ((1.0 - lambda) * di * xi - wxi).abs())
        .fold(0.0, f64::max);
    let xmax = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    r / xmax
}

/// Iterative route: thick-restart Lanczos for the largest eigenvalue
/// `mu` of the deflated `A`, giving `lambda = 1 - mu`. The Ritz tolerance
/// is tightened until the generalized residual meets `tol`.
fn lanczos_second(graph: &AffinityGraph, op: &NormalizedAffinity<'_>, tol: f64) -> Result<Eigenpair> {
    let mut rng = ChaCha8Rng::seed_from_u64(START_SEED);
    let mut start: Vec<f64> = (0..op.len()).map(|_| rng.random::<f64>() - 0.5).collect();
    let mut ritz_tol = tol * 1e-2;
    let mut total = 0;
    loop {
        let run = thick_restart_top(op, &start, ritz_tol, &mut rng)?;
        total += run.matvecs;
        let pair = finish(graph, op, &run.vector, total);
        if pair.residual <= tol {
            return Ok(pair);
        }
        if !run.converged || ritz_tol < 1e-14 {
            return Err(Error::ConvergenceFailure {
                iterations: total,
                residual: pair.residual,
            });
        }
        ritz_tol *= 1e-2;
        start = run.vector;
    }
}

struct LanczosRun {
    vector: Vec<f64>,
    matvecs: usize,
    converged: bool,
}

fn thick_restart_top(
    op: &NormalizedAffinity<'_>,
    start: &[f64],
    ritz_tol: f64,
    rng: &mut ChaCha8Rng,
) -> Result<LanczosRun> {
    let n = op.len();
    // The deflated space has dimension n - 1.
    let m = KRYLOV_DIM.min(n - 1);
    let keep = (m / 2).max(1);

    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(m + 1);
    let mut v0 = start.to_vec();
    project_out(&mut v0, &op.trivial);
    if normalize(&mut v0) == 0.0 {
        v0 = random_orthogonal(rng, op, &basis).expect("deflated space is nonempty");
    }
    basis.push(v0);

    let mut h = DMatrix::<f64>::zeros(m, m);
    let mut scratch = vec![0.0; n];
    let mut w = vec![0.0; n];
    let mut j = 0;
    let mut matvecs = 0;
    let mut best = basis[0].clone();

    for _restart in 0..MAX_RESTARTS {
        let mut beta = 0.0;
        while j < m {
            op.apply(&basis[j], &mut scratch, &mut w);
            matvecs += 1;
            // Classical Gram-Schmidt, applied twice.
            let mut coeffs = vec![0.0; j + 1];
            for _ in 0..2 {
                for (i, v) in basis.iter().take(j + 1).enumerate() {
                    let c = dot(&w, v);
                    coeffs[i] += c;
                    w.iter_mut().zip(v).for_each(|(wi, vi)| *wi -= c * vi);
                }
            }
            project_out(&mut w, &op.trivial);
            for (i, &c) in coeffs.iter().enumerate() {
                h[(i, j)] = c;
                h[(j, i)] = c;
            }
            beta = norm(&w);
            if j + 1 == m {
                break;
            }
            if beta <= 1e-12 {
                // Invariant subspace: continue with a fresh direction.
                let next = match random_orthogonal(rng, op, &basis) {
                    Some(v) => v,
                    None => {
                        let sub = h.view((0, 0), (j + 1, j + 1)).into_owned();
                        let (_, s) = top_ritz(&sub);
                        let vector = combine(&basis[..=j], s.as_slice());
                        return Ok(LanczosRun {
                            vector,
                            matvecs,
                            converged: true,
                        });
                    }
                };
                h[(j + 1, j)] = 0.0;
                h[(j, j + 1)] = 0.0;
                beta = 0.0;
                basis.push(next);
            } else {
                basis.push(w.iter().map(|v| v / beta).collect());
            }
            j += 1;
        }

        let eig = SymmetricEigen::new(h.clone());
        let mut order: Vec<usize> = (0..m).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
        let top = order[0];
        let top_resid = (beta * eig.eigenvectors[(m - 1, top)]).abs();
        let s_top: Vec<f64> = eig.eigenvectors.column(top).iter().copied().collect();
        best = combine(&basis[..m], &s_top);
        if top_resid <= ritz_tol || m + 1 >= n {
            return Ok(LanczosRun {
                vector: best,
                matvecs,
                converged: true,
            });
        }

        // Restart with the `keep` leading Ritz vectors plus the residual direction.
        let mut kept = Vec::with_capacity(m + 1);
        let mut new_h = DMatrix::<f64>::zeros(m, m);
        for (slot, &idx) in order.iter().take(keep).enumerate() {
            let s: Vec<f64> = eig.eigenvectors.column(idx).iter().copied().collect();
            kept.push(combine(&basis[..m], &s));
            new_h[(slot, slot)] = eig.eigenvalues[idx];
            let coupling = beta * eig.eigenvectors[(m - 1, idx)];
            new_h[(slot, keep)] = coupling;
            new_h[(keep, slot)] = coupling;
        }
        if beta > 1e-12 {
            kept.push(w.iter().map(|v| v / beta).collect());
        } else {
            match random_orthogonal(rng, op, &kept) {
                Some(v) => kept.push(v),
                None => break,
            }
            for slot in 0..keep {
                new_h[(slot, keep)] = 0.0;
                new_h[(keep, slot)] = 0.0;
            }
        }
        basis = kept;
        h = new_h;
        j = keep;
    }
    Ok(LanczosRun {
        vector: best,
        matvecs,
        converged: false,
    })
}

fn top_ritz(h: &DMatrix<f64>) -> (f64, nalgebra::DVector<f64>) {
    let eig = SymmetricEigen::new(h.clone());
    let top = eig
        .eigenvalues
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i)
        .expect("nonempty");
    (eig.eigenvalues[top], eig.eigenvectors.column(top).into_owned())
}

fn combine(basis: &[Vec<f64>], coeffs: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; basis[0].len()];
    for (v, &c) in basis.iter().zip(coeffs) {
        out.iter_mut().zip(v).for_each(|(o, vi)| *o += c * vi);
    }
    normalize(&mut out);
    out
}

/// Random unit vector orthogonal to the trivial mode and `basis`, or `None`
/// once the deflated space is exhausted.
fn random_orthogonal(rng: &mut ChaCha8Rng, op: &NormalizedAffinity<'_>, basis: &[Vec<f64>]) -> Option<Vec<f64>> {
    let mut v: Vec<f64> = (0..op.len()).map(|_| rng.random::<f64>() - 0.5).collect();
    let initial = norm(&v);
    for _ in 0..2 {
        project_out(&mut v, &op.trivial);
        for b in basis {
            project_out(&mut v, b);
        }
    }
    (normalize(&mut v) > 1e-8 * initial).then_some(v)
}

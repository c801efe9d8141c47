//! Real symmetric matrices: a small sparse container, dense eigensolvers
//! and a shift-invert Lanczos for interior eigenpairs.

use crate::error::{Error, Result};
use faer::prelude::Solve;
use faer::sparse::{SparseColMat, Triplet};
use faer::{c64, Mat, Side};
use std::collections::BTreeMap;

/// Symmetric matrix stored as a list of `(i, j, value)` entries with each
/// off-diagonal pair listed once. Repeated entries add up.
#[derive(Clone, Debug, Default)]
pub struct SparseSym {
    dim: usize,
    entries: Vec<(usize, usize, f64)>,
}

impl SparseSym {
    pub fn new(dim: usize) -> Self {
        SparseSym { dim, entries: Vec::new() }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entries(&self) -> &[(usize, usize, f64)] {
        &self.entries
    }

    /// Adds `v` to `H[i][j]` and `H[j][i]` (once if `i == j`).
    pub fn push(&mut self, i: usize, j: usize, v: f64) {
        assert!(i < self.dim && j < self.dim, "index out of range");
        self.entries.push((i.min(j), i.max(j), v));
    }

    /// Grows the matrix by `extra` empty rows and columns.
    pub fn grow(&mut self, extra: usize) {
        self.dim += extra;
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.dim];
        for &(i, j, v) in &self.entries {
            y[i] += v * x[j];
            if i != j {
                y[j] += v * x[i];
            }
        }
        y
    }

    pub fn to_dense(&self) -> Mat<f64> {
        let mut m = Mat::<f64>::zeros(self.dim, self.dim);
        for &(i, j, v) in &self.entries {
            m[(i, j)] += v;
            if i != j {
                m[(j, i)] += v;
            }
        }
        m
    }

    /// `‖D H D + H‖_max` for a diagonal sign vector `D`.
    pub fn anticommutator_with_signs(&self, signs: &[f64]) -> f64 {
        let mut acc: BTreeMap<(usize, usize), f64> = BTreeMap::new();
        for &(i, j, v) in &self.entries {
            *acc.entry((i, j)).or_insert(0.0) += v * (signs[i] * signs[j] + 1.0);
        }
        acc.values().fold(0.0, |m, v| m.max(v.abs()))
    }

    fn shifted_csc(&self, sigma: f64) -> Result<SparseColMat<usize, f64>> {
        let mut acc: BTreeMap<(usize, usize), f64> = BTreeMap::new();
        for &(i, j, v) in &self.entries {
            *acc.entry((i, j)).or_insert(0.0) += v;
            if i != j {
                *acc.entry((j, i)).or_insert(0.0) += v;
            }
        }
        for i in 0..self.dim {
            *acc.entry((i, i)).or_insert(0.0) -= sigma;
        }
        let triplets: Vec<Triplet<usize, usize, f64>> =
            acc.into_iter().map(|((i, j), v)| Triplet::new(i, j, v)).collect();
        SparseColMat::try_new_from_triplets(self.dim, self.dim, &triplets)
            .map_err(|e| Error::LinearAlgebra(format!("sparse assembly: {e:?}")))
    }
}

/// Full eigendecomposition of a real symmetric matrix, ascending values.
pub fn dense_eigh(m: &Mat<f64>) -> Result<(Vec<f64>, Mat<f64>)> {
    let evd = m
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::LinearAlgebra(format!("dense eigensolver: {e:?}")))?;
    let s = evd.S().column_vector();
    let values: Vec<f64> = (0..m.nrows()).map(|i| s[i]).collect();
    Ok((values, evd.U().to_owned()))
}

pub fn dense_eigvals(m: &Mat<f64>) -> Result<Vec<f64>> {
    let mut v = m
        .self_adjoint_eigenvalues(Side::Lower)
        .map_err(|e| Error::LinearAlgebra(format!("dense eigensolver: {e:?}")))?;
    v.sort_by(f64::total_cmp);
    Ok(v)
}

/// Eigendecomposition of a complex Hermitian matrix, ascending values.
pub fn hermitian_eigh(m: &Mat<c64>) -> Result<(Vec<f64>, Mat<c64>)> {
    let evd = m
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::LinearAlgebra(format!("hermitian eigensolver: {e:?}")))?;
    let s = evd.S().column_vector();
    let values: Vec<f64> = (0..m.nrows()).map(|i| s[i].re).collect();
    Ok((values, evd.U().to_owned()))
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Converged eigenpair from [`shift_invert_lanczos`].
#[derive(Clone, Debug)]
pub struct RitzPair {
    pub value: f64,
    pub vector: Vec<f64>,
    /// Overlap `⟨start|x⟩` with the normalized start vector.
    pub start_overlap: f64,
    pub residual: f64,
}

/// Eigenpairs of `h` closest to `sigma` from a Krylov space of
/// `(H − σ)⁻¹` seeded with `start`.
///
/// Only the part of the spectrum reachable from `start` is found, which is
/// what the bound-state search wants: inside a degenerate cluster the
/// returned vector is the normalized projection of `start`. Values are
/// refined with the Rayleigh quotient of `h` itself.
pub fn shift_invert_lanczos(
    h: &SparseSym,
    sigma: f64,
    start: &[f64],
    krylov: usize,
    want: usize,
) -> Result<Vec<RitzPair>> {
    let n = h.dim();
    if start.len() != n {
        return Err(Error::LinearAlgebra("start vector has wrong length".into()));
    }
    let lu = h
        .shifted_csc(sigma)?
        .sp_lu()
        .map_err(|e| Error::LinearAlgebra(format!("sparse LU at shift {sigma}: {e:?}")))?;
    let s0 = norm(start);
    if s0 == 0.0 {
        return Err(Error::LinearAlgebra("zero start vector".into()));
    }
    let mut basis: Vec<Vec<f64>> = vec![start.iter().map(|x| x / s0).collect()];
    let mut alpha = Vec::new();
    let mut beta: Vec<f64> = Vec::new();
    let m_max = krylov.min(n).max(1);
    let mut rhs = Mat::<f64>::zeros(n, 1);
    for j in 0..m_max {
        for i in 0..n {
            rhs[(i, 0)] = basis[j][i];
        }
        lu.solve_in_place(rhs.as_mut());
        let mut w: Vec<f64> = (0..n).map(|i| rhs[(i, 0)]).collect();
        alpha.push(dot(&w, &basis[j]));
        for _ in 0..2 {
            for q in &basis {
                let c = dot(&w, q);
                for (wi, qi) in w.iter_mut().zip(q) {
                    *wi -= c * qi;
                }
            }
        }
        let b = norm(&w);
        if j + 1 == m_max || b <= 1e-13 * alpha.iter().fold(0.0f64, |m, a| m.max(a.abs())) {
            break;
        }
        beta.push(b);
        basis.push(w.into_iter().map(|x| x / b).collect());
    }
    let m = alpha.len();
    let t = Mat::<f64>::from_fn(m, m, |i, j| {
        if i == j {
            alpha[i]
        } else if i + 1 == j {
            beta[i]
        } else if j + 1 == i {
            beta[j]
        } else {
            0.0
        }
    });
    let (theta, y) = dense_eigh(&t)?;
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| theta[b].abs().total_cmp(&theta[a].abs()));
    let mut out = Vec::new();
    for &c in order.iter().take(want.min(m)) {
        let mut x = vec![0.0; n];
        for (r, q) in basis.iter().enumerate().take(m) {
            let coef = y[(r, c)];
            for (xi, qi) in x.iter_mut().zip(q) {
                *xi += coef * qi;
            }
        }
        let nx = norm(&x);
        x.iter_mut().for_each(|v| *v /= nx);
        let hx = h.matvec(&x);
        let e = dot(&x, &hx);
        let res = hx.iter().zip(&x).map(|(a, b)| (a - e * b).powi(2)).sum::<f64>().sqrt();
        out.push(RitzPair { value: e, start_overlap: y[(0, c)] / nx, vector: x, residual: res });
    }
    Ok(out)
}

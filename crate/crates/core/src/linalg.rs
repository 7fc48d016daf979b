//! Small dense linear algebra: complex matrices and a Hermitian eigensolver.
//!
//! Everything here targets desk-scale problems (dimension at most a few
//! hundred), so a cyclic Jacobi sweep is plenty: it is simple, `no_std`-clean,
//! and numerically robust, and the same routine serves Hermitian and real
//! symmetric inputs (real inputs stay real throughout).

use alloc::{format, vec, vec::Vec};
use num_complex::Complex64;

use crate::error::Error;
use crate::math;
use crate::Result;

/// Row-major dense complex matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    dim: usize,
    data: Vec<Complex64>,
}

impl DenseMatrix {
    /// Zero matrix of the given dimension.
    pub fn zeros(dim: usize) -> Self {
        DenseMatrix {
            dim,
            data: vec![Complex64::new(0.0, 0.0); dim * dim],
        }
    }

    /// Identity matrix of the given dimension.
    pub fn identity(dim: usize) -> Self {
        let mut m = DenseMatrix::zeros(dim);
        for i in 0..dim {
            m.data[i * dim + i] = Complex64::new(1.0, 0.0);
        }
        m
    }

    /// Builds a matrix from a row-major slice. Errors if the length is not `dim * dim`.
    pub fn from_row_major(dim: usize, data: Vec<Complex64>) -> Result<Self> {
        if data.len() != dim * dim {
            return Err(Error::DimensionMismatch(format!(
                "expected {} entries for a {dim}x{dim} matrix, got {}",
                dim * dim,
                data.len()
            )));
        }
        Ok(DenseMatrix { dim, data })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.data[row * self.dim + col]
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, value: Complex64) {
        self.data[row * self.dim + col] = value;
    }

    #[inline]
    pub fn add_assign_at(&mut self, row: usize, col: usize, value: Complex64) {
        self.data[row * self.dim + col] += value;
    }

    /// Matrix-vector product.
    pub fn mul_vec(&self, v: &[Complex64]) -> Result<Vec<Complex64>> {
        if v.len() != self.dim {
            return Err(Error::DimensionMismatch(format!(
                "vector length {} does not match matrix dimension {}",
                v.len(),
                self.dim
            )));
        }
        let mut out = vec![Complex64::new(0.0, 0.0); self.dim];
        for r in 0..self.dim {
            let mut acc = Complex64::new(0.0, 0.0);
            let row = &self.data[r * self.dim..(r + 1) * self.dim];
            for (a, b) in row.iter().zip(v.iter()) {
                acc += a * b;
            }
            out[r] = acc;
        }
        Ok(out)
    }

    /// Matrix-matrix product.
    pub fn matmul(&self, other: &DenseMatrix) -> Result<DenseMatrix> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch(format!(
                "matrix dimensions {} and {} differ",
                self.dim, other.dim
            )));
        }
        let n = self.dim;
        let mut out = DenseMatrix::zeros(n);
        for r in 0..n {
            for k in 0..n {
                let a = self.data[r * n + k];
                if a.norm_sqr() == 0.0 {
                    continue;
                }
                for c in 0..n {
                    out.data[r * n + c] += a * other.data[k * n + c];
                }
            }
        }
        Ok(out)
    }

    /// Sum of diagonal entries.
    pub fn trace(&self) -> Complex64 {
        (0..self.dim).map(|i| self.get(i, i)).sum()
    }

    /// Largest deviation from Hermitian symmetry, `max |a_rc - conj(a_cr)|`.
    pub fn hermiticity_defect(&self) -> f64 {
        let mut worst = 0.0f64;
        for r in 0..self.dim {
            for c in r..self.dim {
                let d = (self.get(r, c) - self.get(c, r).conj()).norm();
                if d > worst {
                    worst = d;
                }
            }
        }
        worst
    }

    fn frobenius_norm(&self) -> f64 {
        math::sqrt(self.data.iter().map(|z| z.norm_sqr()).sum())
    }

    fn off_diagonal_norm(&self) -> f64 {
        let mut acc = 0.0;
        for r in 0..self.dim {
            for c in 0..self.dim {
                if r != c {
                    acc += self.get(r, c).norm_sqr();
                }
            }
        }
        math::sqrt(acc)
    }
}

/// Eigendecomposition of a Hermitian matrix by cyclic Jacobi sweeps.
///
/// Returns eigenvalues in ascending order and the unitary whose columns are
/// the matching eigenvectors. The input must be Hermitian within a small
/// absolute-plus-relative slack; real symmetric inputs yield real vectors.
pub fn eigh(matrix: &DenseMatrix) -> Result<(Vec<f64>, DenseMatrix)> {
    let n = matrix.dim;
    let scale = matrix.frobenius_norm();
    let defect = matrix.hermiticity_defect();
    if defect > 1e-9 * (1.0 + scale) {
        return Err(Error::NotHermitian(defect));
    }

    let mut a = matrix.clone();
    // Symmetrize exactly so roundoff in the input cannot bias the sweeps.
    for r in 0..n {
        for c in (r + 1)..n {
            let avg = (a.get(r, c) + a.get(c, r).conj()) * 0.5;
            a.set(r, c, avg);
            a.set(c, r, avg.conj());
        }
        let d = a.get(r, r);
        a.set(r, r, Complex64::new(d.re, 0.0));
    }
    let mut v = DenseMatrix::identity(n);

    if n > 1 {
        let tol = 1e-14 * (1.0 + scale);
        let max_sweeps = 64;
        let mut converged = false;
        for _ in 0..max_sweeps {
            if a.off_diagonal_norm() <= tol {
                converged = true;
                break;
            }
            for p in 0..n {
                for q in (p + 1)..n {
                    jacobi_rotate(&mut a, &mut v, p, q);
                }
            }
        }
        if !converged && a.off_diagonal_norm() > tol.max(1e-12 * (1.0 + scale)) {
            return Err(Error::EigenNoConverge(max_sweeps));
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| {
        a.get(i, i)
            .re
            .partial_cmp(&a.get(j, j).re)
            .expect("eigenvalues are finite")
    });
    let energies: Vec<f64> = order.iter().map(|&i| a.get(i, i).re).collect();
    let mut vectors = DenseMatrix::zeros(n);
    for (new_col, &old_col) in order.iter().enumerate() {
        for r in 0..n {
            vectors.set(r, new_col, v.get(r, old_col));
        }
    }
    Ok((energies, vectors))
}

/// One Jacobi rotation zeroing the (p, q) entry of the Hermitian matrix `a`,
/// accumulated into `v`.
fn jacobi_rotate(a: &mut DenseMatrix, v: &mut DenseMatrix, p: usize, q: usize) {
    let apq = a.get(p, q);
    let mag = apq.norm();
    if mag == 0.0 {
        return;
    }
    let app = a.get(p, p).re;
    let aqq = a.get(q, q).re;
    // Phase factor that makes the pivot entry real and positive.
    let phase = apq / mag;
    let tau = (aqq - app) / (2.0 * mag);
    let t = if tau >= 0.0 {
        1.0 / (tau + math::hypot(1.0, tau))
    } else {
        -1.0 / (-tau + math::hypot(1.0, tau))
    };
    let c = 1.0 / math::hypot(1.0, t);
    let s = t * c;
    // Columns p and q mix through the unitary [[c, s], [-s e*, c e*]]
    // with e* the conjugate phase; rows follow by Hermitian symmetry.
    let n = a.dim;
    let ephase = phase.conj();
    for k in 0..n {
        if k == p || k == q {
            continue;
        }
        let akp = a.get(k, p);
        let akq = a.get(k, q);
        let new_kp = akp * c - akq * ephase * s;
        let new_kq = akp * s + akq * ephase * c;
        a.set(k, p, new_kp);
        a.set(p, k, new_kp.conj());
        a.set(k, q, new_kq);
        a.set(q, k, new_kq.conj());
    }
    a.set(p, p, Complex64::new(app - t * mag, 0.0));
    a.set(q, q, Complex64::new(aqq + t * mag, 0.0));
    a.set(p, q, Complex64::new(0.0, 0.0));
    a.set(q, p, Complex64::new(0.0, 0.0));
    for k in 0..n {
        let vkp = v.get(k, p);
        let vkq = v.get(k, q);
        v.set(k, p, vkp * c - vkq * ephase * s);
        v.set(k, q, vkp * s + vkq * ephase * c);
    }
}

/// Regularized least-squares solve for a real symmetric system.
///
/// Returns `argmin_x ||m x - rhs||^2 + ridge ||x||^2` computed through the
/// eigendecomposition of `m`: components along eigenvalue `l` are scaled by
/// `l / (l^2 + ridge)`. With `ridge = 0` the minimal-norm (pseudo-inverse)
/// solution is returned, dropping eigenvalues below a relative cutoff.
/// Also returns the smallest eigenvalue so callers can monitor definiteness.
pub fn ridge_solve_symmetric(m: &[f64], dim: usize, rhs: &[f64], ridge: f64) -> Result<(Vec<f64>, f64)> {
    if m.len() != dim * dim || rhs.len() != dim {
        return Err(Error::DimensionMismatch(format!(
            "system claims dimension {dim} but has {} matrix entries and {} rhs entries",
            m.len(),
            rhs.len()
        )));
    }
    if ridge < 0.0 {
        return Err(Error::NonPositive("ridge", ridge));
    }
    if dim == 0 {
        return Ok((Vec::new(), 0.0));
    }
    let mut cm = DenseMatrix::zeros(dim);
    for r in 0..dim {
        for c in 0..dim {
            cm.set(r, c, Complex64::new(m[r * dim + c], 0.0));
        }
    }
    let (eigs, vecs) = eigh(&cm)?;
    let min_eig = eigs[0];
    let max_abs = eigs.iter().fold(0.0f64, |acc, &e| acc.max(math::abs(e)));
    let cutoff = 1e-12 * max_abs.max(1e-300);
    let mut x = vec![0.0f64; dim];
    for (col, &lambda) in eigs.iter().enumerate() {
        let mut proj = 0.0;
        for r in 0..dim {
            proj += vecs.get(r, col).re * rhs[r];
        }
        let gain = if ridge > 0.0 {
            lambda / (lambda * lambda + ridge)
        } else if math::abs(lambda) <= cutoff {
            0.0
        } else {
            1.0 / lambda
        };
        if gain != 0.0 {
            let w = gain * proj;
            for r in 0..dim {
                x[r] += w * vecs.get(r, col).re;
            }
        }
    }
    Ok((x, min_eig))
}

//! Small dense helpers over `nalgebra` for Hermitian matrices.

// Needed without std; shadowed by inherent methods when std is in the graph.
#[allow(unused_imports)]
use num_traits::Float;
use alloc::vec::Vec;

use nalgebra::linalg::SymmetricEigen;
use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Dense complex matrix used across the crate.
pub type CMatrix = DMatrix<Complex64>;

/// Convergence threshold of the symmetric tridiagonal QR iteration.
pub const EIGEN_TOLERANCE: f64 = 1e-10;

/// Eigenvalues (ascending) and matching unit eigenvectors (columns).
#[derive(Debug, Clone)]
pub struct HermitianEigen {
    pub values: Vec<f64>,
    pub vectors: CMatrix,
}

/// Eigendecomposition of a Hermitian matrix, eigenvalues sorted ascending.
pub fn hermitian_eigen(m: &CMatrix) -> Result<HermitianEigen> {
    let n = m.nrows();
    if n != m.ncols() {
        return Err(Error::SizeMismatch {
            rows: m.nrows(),
            cols: m.ncols(),
            expected: n,
        });
    }
    if n == 0 {
        return Ok(HermitianEigen {
            values: Vec::new(),
            vectors: CMatrix::zeros(0, 0),
        });
    }
    let eig = SymmetricEigen::try_new(hermitian_part(m), EIGEN_TOLERANCE, 0)
        .ok_or(Error::EigenFailure)?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vectors = CMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &eig.eigenvectors.column(src));
    }
    Ok(HermitianEigen { values, vectors })
}

/// Eigenvalues only, ascending.
pub fn hermitian_eigenvalues(m: &CMatrix) -> Result<Vec<f64>> {
    let n = m.nrows();
    if n == 0 {
        return Ok(Vec::new());
    }
    let vals = SymmetricEigen::try_new(hermitian_part(m), EIGEN_TOLERANCE, 0)
        .ok_or(Error::EigenFailure)?
        .eigenvalues;
    let mut v: Vec<f64> = vals.iter().copied().collect();
    v.sort_by(f64::total_cmp);
    Ok(v)
}

/// Spectral norm of a Hermitian matrix (largest absolute eigenvalue).
pub fn hermitian_spectral_norm(m: &CMatrix) -> Result<f64> {
    let v = hermitian_eigenvalues(m)?;
    Ok(v.iter().fold(0.0_f64, |acc, x| acc.max(x.abs())))
}

/// `(M + M^H) / 2`.
pub fn hermitian_part(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()).scale(0.5)
}

/// Lower Cholesky factor `L` of a Hermitian positive definite matrix, `M = L L^H`.
#[derive(Debug, Clone)]
pub struct HpdFactor {
    l: CMatrix,
}

impl HpdFactor {
    pub fn l(&self) -> &CMatrix {
        &self.l
    }

    pub fn logdet(&self) -> f64 {
        2.0 * (0..self.l.nrows()).map(|i| self.l[(i, i)].re.ln()).sum::<f64>()
    }

    /// `M⁻¹ = L^{-H} L^{-1}`.
    pub fn inverse(&self) -> CMatrix {
        let n = self.l.nrows();
        let mut li = CMatrix::zeros(n, n);
        for c in 0..n {
            li[(c, c)] = Complex64::new(1.0 / self.l[(c, c)].re, 0.0);
            for r in c + 1..n {
                let mut acc = Complex64::new(0.0, 0.0);
                for k in c..r {
                    acc += self.l[(r, k)] * li[(k, c)];
                }
                li[(r, c)] = -acc / self.l[(r, r)].re;
            }
        }
        let mut inv = li.adjoint() * li;
        for i in 0..n {
            inv[(i, i)].im = 0.0;
        }
        inv
    }
}

/// Cholesky factorization of the Hermitian part of `m` (lower triangle read),
/// `None` unless every pivot is finite and strictly positive.
pub fn cholesky(m: &CMatrix) -> Option<HpdFactor> {
    let n = m.nrows();
    if n != m.ncols() {
        return None;
    }
    let mut l = CMatrix::zeros(n, n);
    for j in 0..n {
        let mut d = m[(j, j)].re;
        for k in 0..j {
            d -= l[(j, k)].norm_sqr();
        }
        if !(d > 0.0) || !d.is_finite() {
            return None;
        }
        let djj = d.sqrt();
        l[(j, j)] = Complex64::new(djj, 0.0);
        for i in j + 1..n {
            let mut acc = m[(i, j)];
            for k in 0..j {
                acc -= l[(i, k)] * l[(j, k)].conj();
            }
            l[(i, j)] = acc / djj;
        }
    }
    Some(HpdFactor { l })
}

/// Inverse of a Hermitian positive definite matrix, `None` if the Cholesky
/// factorization breaks down.
pub fn hpd_inverse(m: &CMatrix) -> Option<CMatrix> {
    cholesky(m).map(|c| c.inverse())
}

/// `log det` of a Hermitian positive definite matrix from its Cholesky factor.
pub fn hpd_logdet(chol: &HpdFactor) -> f64 {
    chol.logdet()
}

/// Real part of `tr(A B)` without forming the product.
pub fn trace_product_re(a: &CMatrix, b: &CMatrix) -> f64 {
    let n = a.nrows();
    let mut acc = 0.0;
    for i in 0..n {
        for k in 0..a.ncols() {
            let x = a[(i, k)];
            let y = b[(k, i)];
            acc += x.re * y.re - x.im * y.im;
        }
    }
    acc
}

/// Real trace.
pub fn trace_re(m: &CMatrix) -> f64 {
    (0..m.nrows().min(m.ncols())).map(|i| m[(i, i)].re).sum()
}

//! Hermitian Toeplitz matrices parameterized by their generators.
//!
//! Convention: `M[j][k] = γ_{k-j}` for `k >= j` and `M[k][j] = conj(M[j][k])`,
//! i.e. `γ_s = E[z_j conj(z_k)]` at lag `s = k - j`. Under the steering vector
//! `a(f) = (1, e^{i2πf}, ..., e^{i2π(d-1)f})` a single source of power `p`
//! contributes `γ_s = p e^{-i2πsf}`.

// Needed without std; shadowed by inherent methods when std is in the graph.
#[allow(unused_imports)]
use num_traits::Float;
use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix};
use crate::ruler::Ruler;

/// Imaginary residues below this are treated as roundoff on quantities that
/// are analytically real.
pub const IMAG_RESIDUE: f64 = 1e-12;

/// A `d×d` Hermitian Toeplitz matrix stored as `γ_0, ..., γ_{d-1}`, `γ_0` real.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianToeplitz {
    generators: Vec<Complex64>,
}

/// Spectral density `L(θ)` sampled at `θ = j / resolution`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralDensityGrid {
    pub resolution: usize,
    pub values: Vec<f64>,
}

impl SpectralDensityGrid {
    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}

impl HermitianToeplitz {
    /// Builds the matrix from its generators. `Im γ_0` must be exactly zero.
    pub fn from_generators(generators: Vec<Complex64>) -> Result<Self> {
        let Some(g0) = generators.first() else {
            return Err(Error::EmptyGenerators);
        };
        if g0.im != 0.0 {
            return Err(Error::NonRealDiagonal(g0.im));
        }
        Ok(Self { generators })
    }

    /// Like [`from_generators`](Self::from_generators) but discards the
    /// imaginary part of `γ_0`, for outputs of averaging where it is roundoff.
    pub fn from_generators_real_diagonal(mut generators: Vec<Complex64>) -> Result<Self> {
        if let Some(g0) = generators.first_mut() {
            g0.im = 0.0;
        }
        Self::from_generators(generators)
    }

    pub fn identity(dim: usize) -> Self {
        Self::diagonal(dim, 1.0)
    }

    pub fn zeros(dim: usize) -> Self {
        Self::diagonal(dim, 0.0)
    }

    /// `c · I_d`.
    pub fn diagonal(dim: usize, c: f64) -> Self {
        assert!(dim > 0, "dimension must be positive");
        let mut generators = alloc::vec![Complex64::new(0.0, 0.0); dim];
        generators[0].re = c;
        Self { generators }
    }

    /// Reads the generators off the first row of a dense matrix. The caller
    /// is responsible for the matrix actually being Hermitian Toeplitz.
    pub fn from_dense_first_row(m: &CMatrix) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::SizeMismatch {
                rows: m.nrows(),
                cols: m.ncols(),
                expected: m.nrows(),
            });
        }
        let g = (0..m.ncols()).map(|s| m[(0, s)]).collect();
        Self::from_generators_real_diagonal(g)
    }

    pub fn dim(&self) -> usize {
        self.generators.len()
    }

    pub fn generators(&self) -> &[Complex64] {
        &self.generators
    }

    pub fn into_generators(self) -> Vec<Complex64> {
        self.generators
    }

    pub fn gamma0(&self) -> f64 {
        self.generators[0].re
    }

    /// Entry `(j, k)`, 0-based.
    pub fn entry(&self, j: usize, k: usize) -> Complex64 {
        if k >= j {
            self.generators[k - j]
        } else {
            self.generators[j - k].conj()
        }
    }

    pub fn to_dense(&self) -> CMatrix {
        let d = self.dim();
        CMatrix::from_fn(d, d, |j, k| self.entry(j, k))
    }

    /// The `|Ω|×|Ω|` principal submatrix on the ruler coordinates.
    pub fn restrict(&self, ruler: &Ruler) -> Result<CMatrix> {
        if ruler.dim() != self.dim() {
            return Err(Error::LengthMismatch {
                expected: self.dim(),
                actual: ruler.dim(),
            });
        }
        let idx = ruler.indices();
        Ok(CMatrix::from_fn(idx.len(), idx.len(), |a, b| {
            self.entry(idx[a] - 1, idx[b] - 1)
        }))
    }

    /// `self + c · I`.
    pub fn shift_diagonal(&self, c: f64) -> Self {
        let mut g = self.generators.clone();
        g[0].re += c;
        Self { generators: g }
    }

    pub fn scale(&self, c: f64) -> Self {
        Self {
            generators: self.generators.iter().map(|g| g * c).collect(),
        }
    }

    /// `self - other`; dimensions must agree.
    pub fn sub(&self, other: &Self) -> Result<Self> {
        if self.dim() != other.dim() {
            return Err(Error::LengthMismatch {
                expected: self.dim(),
                actual: other.dim(),
            });
        }
        let generators = self
            .generators
            .iter()
            .zip(&other.generators)
            .map(|(a, b)| a - b)
            .collect();
        Ok(Self { generators })
    }

    /// Spectral norm of the densified matrix (dense eigensolver).
    pub fn spectral_norm(&self) -> f64 {
        linalg::hermitian_spectral_norm(&self.to_dense()).unwrap_or(f64::NAN)
    }

    /// Smallest eigenvalue of the densified matrix.
    pub fn min_eigenvalue(&self) -> f64 {
        linalg::hermitian_eigenvalues(&self.to_dense())
            .map(|v| v[0])
            .unwrap_or(f64::NAN)
    }

    /// `L(θ) = γ_0 + Σ_{s≥1} (γ_s e^{i2πsθ} + conj(γ_s) e^{-i2πsθ})`.
    pub fn spectral_density(&self, theta: f64) -> f64 {
        let mut acc = self.generators[0].re;
        for (s, g) in self.generators.iter().enumerate().skip(1) {
            let phase = 2.0 * PI * s as f64 * theta;
            // 2 Re(γ e^{iφ})
            acc += 2.0 * (g.re * phase.cos() - g.im * phase.sin());
        }
        acc
    }

    pub fn spectral_density_grid(&self, resolution: usize) -> SpectralDensityGrid {
        let values = (0..resolution)
            .map(|j| self.spectral_density(j as f64 / resolution as f64))
            .collect();
        SpectralDensityGrid { resolution, values }
    }

    /// Maximum of the spectral density over a uniform grid, an upper-bound
    /// diagnostic for the spectral norm. `None` selects
    /// [`default_density_resolution`].
    pub fn spectral_norm_bound(&self, resolution: Option<usize>) -> Result<f64> {
        let d = self.dim();
        let resolution = resolution.unwrap_or_else(|| default_density_resolution(d));
        if resolution < 2 * d {
            return Err(Error::ResolutionTooCoarse {
                resolution,
                minimum: 2 * d,
            });
        }
        Ok(self.spectral_density_grid(resolution).max())
    }
}

/// `ceil(4π d²)`, the grid size used for the spectral-density bound.
pub fn default_density_resolution(dim: usize) -> usize {
    (4.0 * PI * (dim * dim) as f64).ceil() as usize
}

/// Steering vector `a(f) = (1, e^{i2πf}, ..., e^{i2π(d-1)f})`.
pub fn steering_vector(freq: f64, dim: usize) -> Vec<Complex64> {
    (0..dim)
        .map(|j| Complex64::from_polar(1.0, 2.0 * PI * j as f64 * freq))
        .collect()
}

/// `Σ_k p_k a(f_k) a(f_k)^H` in generator form: `γ_s = Σ_k p_k e^{-i2πs f_k}`.
pub fn vandermonde_synthesize(freqs: &[f64], powers: &[f64], dim: usize) -> Result<HermitianToeplitz> {
    if freqs.len() != powers.len() {
        return Err(Error::LengthMismatch {
            expected: freqs.len(),
            actual: powers.len(),
        });
    }
    if freqs.is_empty() {
        return Err(Error::InvalidArgument("at least one frequency is required"));
    }
    if dim == 0 {
        return Err(Error::EmptyGenerators);
    }
    for (i, f) in freqs.iter().enumerate() {
        if freqs[..i].contains(f) {
            return Err(Error::DuplicateFrequency(*f));
        }
    }
    if powers.iter().any(|p| !(*p >= 0.0)) {
        return Err(Error::InvalidArgument("powers must be nonnegative"));
    }
    let mut g = alloc::vec![Complex64::new(0.0, 0.0); dim];
    for (&f, &p) in freqs.iter().zip(powers) {
        for (s, gs) in g.iter_mut().enumerate() {
            *gs += Complex64::from_polar(p, -2.0 * PI * s as f64 * f);
        }
    }
    HermitianToeplitz::from_generators_real_diagonal(g)
}

/// Per-lag sums `Σ_{(j,k)∈Ω_s} M[pos j][pos k]` of an `|Ω|×|Ω|` matrix.
pub fn lag_sums(m: &CMatrix, ruler: &Ruler) -> Result<Vec<Complex64>> {
    let n = ruler.len();
    if m.nrows() != n || m.ncols() != n {
        return Err(Error::SizeMismatch {
            rows: m.nrows(),
            cols: m.ncols(),
            expected: n,
        });
    }
    let idx = ruler.indices();
    let mut sums = alloc::vec![Complex64::new(0.0, 0.0); ruler.dim()];
    for a in 0..n {
        for b in a..n {
            sums[idx[b] - idx[a]] += m[(a, b)];
        }
    }
    Ok(sums)
}

/// Per-lag average of an `|Ω|×|Ω|` Hermitian matrix over the ordered pairs
/// `(j, k)`, `k - j = s`. Output element 0 is forced real.
///
/// Each mean is taken relative to the first entry of its lag, so a constant
/// diagonal is reproduced exactly.
pub fn toeplitz_adjoint_project(m: &CMatrix, ruler: &Ruler) -> Result<Vec<Complex64>> {
    let n = ruler.len();
    if m.nrows() != n || m.ncols() != n {
        return Err(Error::SizeMismatch {
            rows: m.nrows(),
            cols: m.ncols(),
            expected: n,
        });
    }
    let zero = Complex64::new(0.0, 0.0);
    let mut first: Vec<Option<Complex64>> = alloc::vec![None; ruler.dim()];
    let mut offsets = alloc::vec![zero; ruler.dim()];
    let idx = ruler.indices();
    for a in 0..n {
        for b in a..n {
            let s = idx[b] - idx[a];
            let v = m[(a, b)];
            match first[s] {
                None => first[s] = Some(v),
                Some(f) => offsets[s] += v - f,
            }
        }
    }
    let mut out: Vec<Complex64> = first
        .iter()
        .zip(&offsets)
        .zip(ruler.lag_counts())
        .map(|((f, o), &c)| f.unwrap_or(zero) + o / c as f64)
        .collect();
    out[0].im = 0.0;
    Ok(out)
}

//! Ground-truth covariance synthesis and circularly symmetric complex
//! Gaussian snapshots restricted to a ruler.

// Needed without std; shadowed by inherent methods when std is in the graph.
#[allow(unused_imports)]
use num_traits::Float;
use alloc::vec::Vec;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix};
use crate::quantizer::QuantizationSpec;
use crate::rng::{self, COVARIANCE_STREAM, SAMPLE_STREAM};
use crate::ruler::Ruler;
use crate::toeplitz::{vandermonde_synthesize, HermitianToeplitz};

/// Minimum spacing between synthesized frequencies.
const MIN_FREQ_SEPARATION: f64 = 1e-6;

/// Whether a batch holds the analog snapshots or their dithered quantization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Stage {
    Raw,
    Quantized {
        spec: QuantizationSpec,
        dither_seed: u64,
    },
}

/// `n` snapshots observed on the ruler coordinates, stored row-major
/// (`n × |Ω|`).
#[derive(Debug, Clone, PartialEq)]
pub struct SampleBatch {
    ruler: Ruler,
    n: usize,
    data: Vec<Complex64>,
    stage: Stage,
    seed: u64,
}

impl SampleBatch {
    /// Wraps existing data. `data.len()` must equal `n · |Ω|`.
    pub fn new(ruler: Ruler, n: usize, data: Vec<Complex64>, stage: Stage, seed: u64) -> Result<Self> {
        if data.len() != n * ruler.len() {
            return Err(Error::LengthMismatch {
                expected: n * ruler.len(),
                actual: data.len(),
            });
        }
        Ok(Self {
            ruler,
            n,
            data,
            stage,
            seed,
        })
    }

    pub fn ruler(&self) -> &Ruler {
        &self.ruler
    }

    pub fn dim(&self) -> usize {
        self.ruler.dim()
    }

    /// Number of snapshots.
    pub fn n(&self) -> usize {
        self.n
    }

    /// Entries per snapshot (`|Ω|`).
    pub fn width(&self) -> usize {
        self.ruler.len()
    }

    pub fn stage(&self) -> Stage {
        self.stage
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Quantization spec for quantized batches.
    pub fn spec(&self) -> Option<QuantizationSpec> {
        match self.stage {
            Stage::Raw => None,
            Stage::Quantized { spec, .. } => Some(spec),
        }
    }

    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    pub fn row(&self, l: usize) -> &[Complex64] {
        let w = self.width();
        &self.data[l * w..(l + 1) * w]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[Complex64]> {
        self.data.chunks_exact(self.width().max(1)).take(self.n)
    }

    /// Largest complex modulus over all entries.
    pub fn max_modulus(&self) -> f64 {
        self.data.iter().fold(0.0_f64, |m, z| m.max(z.norm()))
    }

    pub(crate) fn with_stage(&self, data: Vec<Complex64>, stage: Stage) -> Self {
        Self {
            ruler: self.ruler.clone(),
            n: self.n,
            data,
            stage,
            seed: self.seed,
        }
    }
}

/// Random PSD Toeplitz covariance: `d` distinct frequencies from `U(0,1)` and
/// powers `|N(0,1)|`, combined through the Vandermonde decomposition.
pub fn random_toeplitz_covariance(dim: usize, seed: u64) -> HermitianToeplitz {
    assert!(dim > 0, "dimension must be positive");
    let mut rng = rng::substream(seed, COVARIANCE_STREAM);
    let mut freqs: Vec<f64> = Vec::with_capacity(dim);
    while freqs.len() < dim {
        let f: f64 = rng.random();
        if freqs.iter().all(|g| (f - g).abs() >= MIN_FREQ_SEPARATION) {
            freqs.push(f);
        }
    }
    let powers: Vec<f64> = (0..dim)
        .map(|_| {
            let x: f64 = rng.sample(StandardNormal);
            x.abs()
        })
        .collect();
    vandermonde_synthesize(&freqs, &powers, dim).expect("frequencies are distinct by construction")
}

/// Square-root factor of a fixed covariance, reusable across many draws.
///
/// `F F^H = T` with `F = V diag(sqrt(max(λ, 0)))` from the Hermitian
/// eigendecomposition; only the rows on the ruler are kept.
#[derive(Debug, Clone)]
pub struct GaussianSampler {
    ruler: Ruler,
    factor_rows: CMatrix,
}

impl GaussianSampler {
    pub fn new(cov: &HermitianToeplitz, ruler: &Ruler) -> Result<Self> {
        let d = cov.dim();
        if ruler.dim() != d {
            return Err(Error::LengthMismatch {
                expected: d,
                actual: ruler.dim(),
            });
        }
        let eig = linalg::hermitian_eigen(&cov.to_dense())?;
        let scale = cov.gamma0().abs().max(f64::MIN_POSITIVE);
        if eig.values[0] < -1e-6 * scale {
            return Err(Error::NotPsd(eig.values[0]));
        }
        let idx = ruler.indices();
        let factor_rows = CMatrix::from_fn(idx.len(), d, |a, c| {
            eig.vectors[(idx[a] - 1, c)] * eig.values[c].max(0.0).sqrt()
        });
        Ok(Self {
            ruler: ruler.clone(),
            factor_rows,
        })
    }

    /// Draws `n` snapshots from the `(seed, SAMPLE_STREAM)` generator.
    pub fn sample(&self, n: usize, seed: u64) -> Result<SampleBatch> {
        if n == 0 {
            return Err(Error::EmptyBatch);
        }
        let d = self.factor_rows.ncols();
        let m = self.factor_rows.nrows();
        let mut rng = rng::substream(seed, SAMPLE_STREAM);
        let half = core::f64::consts::FRAC_1_SQRT_2;
        let mut w = alloc::vec![Complex64::new(0.0, 0.0); d];
        let mut data = Vec::with_capacity(n * m);
        for _ in 0..n {
            for wc in w.iter_mut() {
                let re: f64 = rng.sample(StandardNormal);
                let im: f64 = rng.sample(StandardNormal);
                *wc = Complex64::new(re * half, im * half);
            }
            for a in 0..m {
                let mut acc = Complex64::new(0.0, 0.0);
                for (c, wc) in w.iter().enumerate() {
                    acc += self.factor_rows[(a, c)] * wc;
                }
                data.push(acc);
            }
        }
        SampleBatch::new(self.ruler.clone(), n, data, Stage::Raw, seed)
    }
}

/// `n` i.i.d. draws of `CN(0, T)` observed on `ruler`.
pub fn sample_complex_gaussian(
    cov: &HermitianToeplitz,
    ruler: &Ruler,
    n: usize,
    seed: u64,
) -> Result<SampleBatch> {
    GaussianSampler::new(cov, ruler)?.sample(n, seed)
}

//! Closed-form covariance estimators on quantized batches.
//!
//! * Q-TSCM: per-lag averages of the quantized Gram matrix over the ruler,
//!   minus the dither bias at lag 0. Unbiased for any ruler.
//! * 2k-TSCM: the same estimator on a batch from the clipped quantizer.
//! * Q-SCM: the dense bias-corrected Gram matrix (full ruler only).

use alloc::string::String;
use core::fmt;

use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix};
use crate::quantizer::QuantizationSpec;
use crate::ruler::Ruler;
use crate::sampling::{SampleBatch, Stage};
use crate::toeplitz::{toeplitz_adjoint_project, HermitianToeplitz};

/// Quantization spec implied by a batch stage; raw data is treated as `Δ = 0`.
pub fn batch_spec(batch: &SampleBatch) -> QuantizationSpec {
    match batch.stage() {
        Stage::Raw => QuantizationSpec::unquantized(),
        Stage::Quantized { spec, .. } => spec,
    }
}

/// `(1/n) Σ_l ż^{(l)} ż^{(l)H}` on ruler coordinates, without bias correction.
pub fn quantized_sample_covariance(batch: &SampleBatch) -> Result<CMatrix> {
    let n = batch.n();
    if n == 0 {
        return Err(Error::EmptyBatch);
    }
    let m = batch.width();
    let mut g = CMatrix::zeros(m, m);
    for row in batch.rows() {
        for a in 0..m {
            let za = row[a];
            for b in a..m {
                g[(a, b)] += za * row[b].conj();
            }
        }
    }
    let inv_n = 1.0 / n as f64;
    for a in 0..m {
        g[(a, a)].im = 0.0;
        for b in a..m {
            g[(a, b)] *= inv_n;
            if b > a {
                g[(b, a)] = g[(a, b)].conj();
            }
        }
    }
    Ok(g)
}

/// Q-TSCM (and 2k-TSCM when the batch came from the clipped quantizer).
pub fn qtscm(batch: &SampleBatch) -> Result<HermitianToeplitz> {
    let r = quantized_sample_covariance(batch)?;
    qtscm_from_covariance(&r, batch.ruler(), &batch_spec(batch))
}

/// Q-TSCM from a precomputed quantized sample covariance.
pub fn qtscm_from_covariance(
    rhat: &CMatrix,
    ruler: &Ruler,
    spec: &QuantizationSpec,
) -> Result<HermitianToeplitz> {
    let mut g = toeplitz_adjoint_project(rhat, ruler)?;
    g[0].re -= spec.bias();
    HermitianToeplitz::from_generators(g)
}

/// Q-SCM: `(1/n) Σ ż ż^H - (‖Δ‖²/4) I`, no projection.
pub fn qscm(batch: &SampleBatch) -> Result<CMatrix> {
    if !batch.ruler().is_full() {
        return Err(Error::NotFullRuler);
    }
    let mut r = quantized_sample_covariance(batch)?;
    let bias = batch_spec(batch).bias();
    for a in 0..r.nrows() {
        r[(a, a)].re -= bias;
    }
    Ok(r)
}

/// `‖T̂ - T‖₂ / ‖T‖₂`.
pub fn relative_spectral_error(est: &HermitianToeplitz, truth: &HermitianToeplitz) -> Result<f64> {
    let diff = est.sub(truth)?;
    Ok(diff.spectral_norm() / truth.spectral_norm())
}

/// Relative spectral error of a dense `d×d` estimate.
pub fn relative_spectral_error_dense(est: &CMatrix, truth: &HermitianToeplitz) -> Result<f64> {
    let t = truth.to_dense();
    if est.shape() != t.shape() {
        return Err(Error::SizeMismatch {
            rows: est.nrows(),
            cols: est.ncols(),
            expected: truth.dim(),
        });
    }
    let num = linalg::hermitian_spectral_norm(&(est - &t))?;
    let den = linalg::hermitian_spectral_norm(&t)?;
    Ok(num / den)
}

/// `K = ‖T‖₂^{1/2} + 2‖Δ‖₂`, the scale constant of the error bounds.
pub fn bound_constant(truth: &HermitianToeplitz, spec: &QuantizationSpec) -> f64 {
    truth.spectral_norm().sqrt() + 2.0 * spec.norm_sq().sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EstimatorKind {
    Qtscm,
    Tscm2k,
    Qscm,
    Qspa,
}

impl EstimatorKind {
    pub const ALL: [EstimatorKind; 4] = [Self::Qtscm, Self::Tscm2k, Self::Qscm, Self::Qspa];

    pub fn name(self) -> &'static str {
        match self {
            Self::Qtscm => "Q-TSCM",
            Self::Tscm2k => "2k-TSCM",
            Self::Qscm => "Q-SCM",
            Self::Qspa => "Q-SPA",
        }
    }

    /// Accepts display names and lowercase aliases (`qtscm`, `2k-tscm`, ...).
    pub fn parse(s: &str) -> Option<Self> {
        let key: String = s
            .chars()
            .filter(|c| c.is_ascii_alphanumeric())
            .map(|c| c.to_ascii_lowercase())
            .collect();
        match key.as_str() {
            "qtscm" => Some(Self::Qtscm),
            "2ktscm" | "tscm2k" => Some(Self::Tscm2k),
            "qscm" => Some(Self::Qscm),
            "qspa" => Some(Self::Qspa),
            _ => None,
        }
    }
}

impl fmt::Display for EstimatorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// An estimate in either Toeplitz or dense form.
#[derive(Debug, Clone, PartialEq)]
pub enum Estimate {
    Toeplitz(HermitianToeplitz),
    Dense(CMatrix),
}

impl Estimate {
    pub fn to_dense(&self) -> CMatrix {
        match self {
            Self::Toeplitz(t) => t.to_dense(),
            Self::Dense(m) => m.clone(),
        }
    }

    pub fn relative_error(&self, truth: &HermitianToeplitz) -> Result<f64> {
        match self {
            Self::Toeplitz(t) => relative_spectral_error(t, truth),
            Self::Dense(m) => relative_spectral_error_dense(m, truth),
        }
    }
}

/// An estimate together with how it was produced.
#[derive(Debug, Clone)]
pub struct EstimationReport {
    pub estimate: Estimate,
    pub estimator: EstimatorKind,
    pub spec: QuantizationSpec,
    pub ruler: Ruler,
    pub n: usize,
    pub rel_error_spectral: Option<f64>,
}

impl EstimationReport {
    pub fn new(estimate: Estimate, estimator: EstimatorKind, batch: &SampleBatch) -> Self {
        Self {
            estimate,
            estimator,
            spec: batch_spec(batch),
            ruler: batch.ruler().clone(),
            n: batch.n(),
            rel_error_spectral: None,
        }
    }

    /// Fills in the relative spectral error against `truth`.
    pub fn with_truth(mut self, truth: &HermitianToeplitz) -> Result<Self> {
        self.rel_error_spectral = Some(self.estimate.relative_error(truth)?);
        Ok(self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use num_complex::Complex64;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn quantized(ruler: Ruler, n: usize, data: alloc::vec::Vec<Complex64>, spec: QuantizationSpec) -> SampleBatch {
        SampleBatch::new(
            ruler,
            n,
            data,
            Stage::Quantized {
                spec,
                dither_seed: 0,
            },
            0,
        )
        .unwrap()
    }

    #[test]
    fn zero_batch_gives_zero() {
        let b = quantized(Ruler::full(3), 2, vec![c(0.0, 0.0); 6], QuantizationSpec::unquantized());
        assert_eq!(qtscm(&b).unwrap(), HermitianToeplitz::zeros(3));
        assert_eq!(qscm(&b).unwrap(), CMatrix::zeros(3, 3));
        assert_eq!(quantized_sample_covariance(&b).unwrap(), CMatrix::zeros(3, 3));
    }

    #[test]
    fn scalar_bias_correction() {
        let spec = QuantizationSpec::infinite(2.0, 2.0).unwrap();
        let b = quantized(Ruler::full(1), 1, vec![c(3.0, 0.0)], spec);
        let t = qtscm(&b).unwrap();
        assert_eq!(t.generators(), &[c(7.0, 0.0)]);
        assert_eq!(qscm(&b).unwrap()[(0, 0)], c(7.0, 0.0));
    }

    #[test]
    fn outer_product_example() {
        let b = quantized(Ruler::full(2), 1, vec![c(1.0, 0.0), c(0.0, 1.0)], QuantizationSpec::unquantized());
        let r = quantized_sample_covariance(&b).unwrap();
        assert_eq!(r[(0, 0)], c(1.0, 0.0));
        assert_eq!(r[(0, 1)], c(0.0, -1.0));
        assert_eq!(r[(1, 0)], c(0.0, 1.0));
        assert_eq!(r[(1, 1)], c(1.0, 0.0));
    }

    #[test]
    fn errors() {
        let sparse = Ruler::new(vec![1, 2, 4], 4).unwrap();
        let b = quantized(sparse.clone(), 1, vec![c(1.0, 0.0); 3], QuantizationSpec::unquantized());
        assert_eq!(qscm(&b), Err(Error::NotFullRuler));
        let empty = quantized(sparse, 0, vec![], QuantizationSpec::unquantized());
        assert_eq!(qtscm(&empty), Err(Error::EmptyBatch));
    }

    #[test]
    fn names_round_trip() {
        for k in EstimatorKind::ALL {
            assert_eq!(EstimatorKind::parse(k.name()), Some(k));
        }
        assert_eq!(EstimatorKind::parse("qspa"), Some(EstimatorKind::Qspa));
        assert_eq!(EstimatorKind::parse("svd"), None);
    }
}

//! Covariance estimation from dithered, quantized samples of a stationary
//! complex process observed on a sparse array.
//!
//! The crate is `no_std` (with `alloc`). It covers Hermitian Toeplitz
//! matrices, sparse rulers, Gaussian sampling, dithered quantization, the
//! Toeplitz-projected and barrier-based covariance estimators, and MUSIC
//! direction finding.

#![no_std]
extern crate alloc;

pub mod doa;
pub mod error;
pub mod estimators;
pub mod linalg;
pub mod qspa;
pub mod quantizer;
pub mod rng;
pub mod ruler;
pub mod sampling;
pub mod toeplitz;

pub use doa::{DoaScene, FrequencyEstimate};
pub use error::{Error, Result};
pub use estimators::{Estimate, EstimationReport, EstimatorKind};
pub use qspa::{QspaOptions, QspaSolution};
pub use quantizer::{LevelRule, QuantizationSpec};
pub use ruler::Ruler;
pub use sampling::{GaussianSampler, SampleBatch, Stage};
pub use toeplitz::HermitianToeplitz;

//! Spatial frequency estimation with MUSIC on an estimated covariance.
//!
//! Steering vectors are `a(f)_j = e^{i2πjf}`, matching generators
//! `γ_s = Σ p e^{-i2πsf}`. Peaks are searched on a circular grid and refined
//! by golden-section search within one grid cell on either side.

// Needed without std; shadowed by inherent methods when std is in the graph.
#[allow(unused_imports)]
use num_traits::Float;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix};
use crate::toeplitz::{vandermonde_synthesize, HermitianToeplitz};

/// Default MUSIC grid size.
pub const DEFAULT_GRID: usize = 4096;

/// Line-spectrum scene: `R = Σ σ_k² a(f_k) a(f_k)^H + σ_n² I`.
#[derive(Debug, Clone, PartialEq)]
pub struct DoaScene {
    freqs: Vec<f64>,
    powers: Vec<f64>,
    noise_var: f64,
    dim: usize,
}

impl DoaScene {
    pub fn new(freqs: Vec<f64>, powers: Vec<f64>, noise_var: f64, dim: usize) -> Result<Self> {
        if freqs.len() != powers.len() {
            return Err(Error::LengthMismatch {
                expected: freqs.len(),
                actual: powers.len(),
            });
        }
        if freqs.is_empty() || freqs.len() >= dim {
            return Err(Error::KOutOfRange {
                k: freqs.len(),
                dim,
            });
        }
        if freqs.iter().any(|f| !(0.0..1.0).contains(f)) {
            return Err(Error::InvalidArgument("frequencies must lie in [0, 1)"));
        }
        if powers.iter().any(|p| !(*p > 0.0) || !p.is_finite()) {
            return Err(Error::InvalidArgument("source powers must be positive"));
        }
        if !(noise_var >= 0.0) || !noise_var.is_finite() {
            return Err(Error::InvalidArgument("noise variance must be nonnegative"));
        }
        for (i, f) in freqs.iter().enumerate() {
            if freqs[..i].contains(f) {
                return Err(Error::DuplicateFrequency(*f));
            }
        }
        Ok(Self {
            freqs,
            powers,
            noise_var,
            dim,
        })
    }

    pub fn freqs(&self) -> &[f64] {
        &self.freqs
    }

    pub fn powers(&self) -> &[f64] {
        &self.powers
    }

    pub fn noise_var(&self) -> f64 {
        self.noise_var
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn num_sources(&self) -> usize {
        self.freqs.len()
    }

    pub fn covariance(&self) -> Result<HermitianToeplitz> {
        Ok(vandermonde_synthesize(&self.freqs, &self.powers, self.dim)?.shift_diagonal(self.noise_var))
    }

    /// `10 log10(Σ σ_k² / (K σ_n²))`; infinite without noise.
    pub fn snr_db(&self) -> f64 {
        let k = self.freqs.len() as f64;
        let total: f64 = self.powers.iter().sum();
        10.0 * (total / (k * self.noise_var)).log10()
    }

    /// Noise variance giving `snr_db` with the scene's powers.
    pub fn noise_for_snr(powers: &[f64], snr_db: f64) -> f64 {
        let k = powers.len() as f64;
        let total: f64 = powers.iter().sum();
        total / (k * 10f64.powf(snr_db / 10.0))
    }
}

/// Noise-subspace basis of a dense Hermitian matrix, `d × (d - K)`.
fn noise_subspace(m: &CMatrix, k: usize) -> Result<CMatrix> {
    let d = m.nrows();
    if k == 0 || k >= d {
        return Err(Error::KOutOfRange { k, dim: d });
    }
    let eig = linalg::hermitian_eigen(m)?;
    Ok(eig.vectors.columns(0, d - k).into_owned())
}

fn check_grid(grid_size: usize, d: usize) -> Result<()> {
    if grid_size < 8 * d {
        return Err(Error::InvalidArgument("MUSIC grid must have at least 8d points"));
    }
    Ok(())
}

/// `‖E_n^H a(θ)‖²`.
fn projection(noise: &CMatrix, theta: f64) -> f64 {
    let d = noise.nrows();
    let a: Vec<Complex64> = (0..d)
        .map(|j| Complex64::from_polar(1.0, 2.0 * PI * j as f64 * theta))
        .collect();
    let mut acc = 0.0;
    for c in 0..noise.ncols() {
        let mut dot = Complex64::new(0.0, 0.0);
        for (j, aj) in a.iter().enumerate() {
            dot += noise[(j, c)].conj() * aj;
        }
        acc += dot.norm_sqr();
    }
    acc
}

fn pseudo_spectrum(noise: &CMatrix, theta: f64) -> f64 {
    1.0 / projection(noise, theta).max(f64::MIN_POSITIVE)
}

/// MUSIC pseudo-spectrum at `θ_j = j / grid_size`.
pub fn music_spectrum(t_est: &HermitianToeplitz, k: usize, grid_size: usize) -> Result<Vec<f64>> {
    music_spectrum_dense(&t_est.to_dense(), k, grid_size)
}

/// MUSIC pseudo-spectrum of a dense Hermitian estimate.
pub fn music_spectrum_dense(m: &CMatrix, k: usize, grid_size: usize) -> Result<Vec<f64>> {
    let noise = noise_subspace(m, k)?;
    check_grid(grid_size, m.nrows())?;
    Ok((0..grid_size)
        .map(|j| pseudo_spectrum(&noise, j as f64 / grid_size as f64))
        .collect())
}

/// Frequency estimates, ascending. `degenerate` is set when the spectrum has
/// fewer than `K` local maxima and the remainder was padded.
#[derive(Debug, Clone, PartialEq)]
pub struct FrequencyEstimate {
    pub freqs: Vec<f64>,
    pub degenerate: bool,
}

/// Relative flatness below which the spectrum has no peaks.
const FLAT_TOLERANCE: f64 = 1e-9;

/// Indices of circular local maxima, strongest first.
fn local_maxima(spec: &[f64]) -> Vec<usize> {
    let g = spec.len();
    let (lo, hi) = spec
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    if hi - lo <= FLAT_TOLERANCE * hi {
        return Vec::new();
    }
    let mut peaks: Vec<usize> = (0..g)
        .filter(|&j| {
            let prev = spec[(j + g - 1) % g];
            let next = spec[(j + 1) % g];
            spec[j] >= prev && spec[j] > next
        })
        .collect();
    peaks.sort_by(|&a, &b| spec[b].total_cmp(&spec[a]).then(a.cmp(&b)));
    peaks
}

/// Golden-section maximization of the pseudo-spectrum on `[center - h, center + h]`.
fn refine(noise: &CMatrix, center: f64, h: f64) -> f64 {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (center - h, center + h);
    let mut x1 = b - inv_phi * (b - a);
    let mut x2 = a + inv_phi * (b - a);
    // minimize the projection, which maximizes the pseudo-spectrum
    let mut f1 = projection(noise, x1);
    let mut f2 = projection(noise, x2);
    for _ in 0..60 {
        if f1 <= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - inv_phi * (b - a);
            f1 = projection(noise, x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + inv_phi * (b - a);
            f2 = projection(noise, x2);
        }
    }
    let best = if f1 <= f2 { x1 } else { x2 };
    let center_val = projection(noise, center);
    let chosen = if center_val < f1.min(f2) { center } else { best };
    chosen.rem_euclid(1.0)
}

/// The `K` strongest MUSIC peaks, refined and sorted ascending.
pub fn estimate_frequencies(t_est: &HermitianToeplitz, k: usize, grid_size: usize) -> Result<FrequencyEstimate> {
    estimate_frequencies_dense(&t_est.to_dense(), k, grid_size)
}

/// As [`estimate_frequencies`] for a dense Hermitian estimate.
pub fn estimate_frequencies_dense(m: &CMatrix, k: usize, grid_size: usize) -> Result<FrequencyEstimate> {
    let noise = noise_subspace(m, k)?;
    check_grid(grid_size, m.nrows())?;
    let spec: Vec<f64> = (0..grid_size)
        .map(|j| pseudo_spectrum(&noise, j as f64 / grid_size as f64))
        .collect();
    let peaks = local_maxima(&spec);
    let degenerate = peaks.len() < k;
    let mut chosen: Vec<usize> = peaks.into_iter().take(k).collect();
    if degenerate {
        let mut rest: Vec<usize> = (0..grid_size).filter(|j| !chosen.contains(j)).collect();
        rest.sort_by(|&a, &b| spec[b].total_cmp(&spec[a]).then(a.cmp(&b)));
        chosen.extend(rest.into_iter().take(k - chosen.len()));
    }
    let h = 1.0 / grid_size as f64;
    let mut freqs: Vec<f64> = chosen
        .iter()
        .map(|&j| {
            let center = j as f64 * h;
            if degenerate {
                center
            } else {
                refine(&noise, center, h)
            }
        })
        .collect();
    freqs.sort_by(f64::total_cmp);
    Ok(FrequencyEstimate { freqs, degenerate })
}

/// `min(|a - b|, 1 - |a - b|)` after reducing both to `[0, 1)`.
pub fn circular_distance(a: f64, b: f64) -> f64 {
    let t = (a - b).rem_euclid(1.0);
    t.min(1.0 - t)
}

/// Minimum over matchings of `(1/K) Σ dist(f̂, f)²` with circular distance.
pub fn frequency_mse(estimates: &[f64], truth: &[f64]) -> Result<f64> {
    if estimates.len() != truth.len() {
        return Err(Error::LengthMismatch {
            expected: truth.len(),
            actual: estimates.len(),
        });
    }
    let k = truth.len();
    if k == 0 {
        return Ok(0.0);
    }
    let cost: Vec<Vec<f64>> = estimates
        .iter()
        .map(|&e| truth.iter().map(|&t| circular_distance(e, t).powi(2)).collect())
        .collect();
    let assignment = min_cost_assignment(&cost);
    let total: f64 = assignment.iter().enumerate().map(|(i, &j)| cost[i][j]).sum();
    Ok(total / k as f64)
}

/// Hungarian algorithm on a square cost matrix; returns the column for each row.
fn min_cost_assignment(cost: &[Vec<f64>]) -> Vec<usize> {
    let n = cost.len();
    let inf = f64::INFINITY;
    // 1-based potentials; column 0 is a sentinel
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut owner = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        owner[0] = i;
        let mut j0 = 0;
        let mut minv = vec![inf; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = owner[j0];
            let mut delta = inf;
            let mut j1 = 0;
            for j in 1..=n {
                if !used[j] {
                    let cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[owner[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if owner[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            owner[j0] = owner[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut out = vec![0usize; n];
    for j in 1..=n {
        if owner[j] > 0 {
            out[owner[j] - 1] = j - 1;
        }
    }
    out
}

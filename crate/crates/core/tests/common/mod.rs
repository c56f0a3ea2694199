#![allow(dead_code)]

use std::f64::consts::PI;

use num_complex::Complex64;
use qtcov_core::linalg::CMatrix;
use qtcov_core::HermitianToeplitz;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Mean and standard error of the mean.
pub fn mean_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
    (m, (var / n).sqrt())
}

/// Least-squares slope of y on x.
pub fn slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx
}

pub fn random_hermitian(d: usize, rng: &mut ChaCha8Rng) -> CMatrix {
    let mut m = CMatrix::zeros(d, d);
    for j in 0..d {
        m[(j, j)] = c(rng.random_range(-1.0..1.0), 0.0);
        for k in j + 1..d {
            let v = c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
            m[(j, k)] = v;
            m[(k, j)] = v.conj();
        }
    }
    m
}

/// Random Hermitian positive definite matrix `A A^H + floor I`.
pub fn random_hpd(d: usize, floor: f64, rng: &mut ChaCha8Rng) -> CMatrix {
    let a = CMatrix::from_fn(d, d, |_, _| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
    &a * a.adjoint() + CMatrix::identity(d, d).scale(floor)
}

/// Steering vector computed independently of the library.
pub fn steering(f: f64, d: usize) -> Vec<Complex64> {
    (0..d)
        .map(|j| {
            let phi = 2.0 * PI * j as f64 * f;
            c(phi.cos(), phi.sin())
        })
        .collect()
}

/// `Σ p a(f) a(f)^H` as a dense matrix.
pub fn outer_product_sum(freqs: &[f64], powers: &[f64], d: usize) -> CMatrix {
    let mut m = CMatrix::zeros(d, d);
    for (&f, &p) in freqs.iter().zip(powers) {
        let a = steering(f, d);
        for j in 0..d {
            for k in 0..d {
                m[(j, k)] += a[j] * a[k].conj() * p;
            }
        }
    }
    m
}

/// Largest singular value by power iteration on `M^H M`.
pub fn power_norm(m: &CMatrix) -> f64 {
    let d = m.ncols();
    let g = m.adjoint() * m;
    let mut v = CMatrix::from_fn(d, 1, |j, _| c(1.0 + 0.1 * j as f64, 0.3 * j as f64));
    let mut lambda = 0.0;
    for _ in 0..2000 {
        let w = &g * &v;
        let nw = w.norm();
        if nw == 0.0 {
            return 0.0;
        }
        v = w.unscale(nw);
        lambda = nw;
    }
    lambda.sqrt()
}

pub fn max_abs_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

pub fn toeplitz_max_diff(a: &HermitianToeplitz, b: &HermitianToeplitz) -> f64 {
    a.generators()
        .iter()
        .zip(b.generators())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

//! Triangular-dithered uniform quantization of complex data.
//!
//! The scalar quantizer is `Q_Δ(x) = Δ (floor(x / Δ) + 1/2)` with `Q_0(x) = x`.
//! Dither entries are the sum of two independent `U(-Δ/2, Δ/2)` draws, which
//! makes the quantized second moment an exact shift of the analog one:
//! `E[ż_j conj(ż_k)] = E[z_j conj(z_k)] + (Δ_r² + Δ_i²)/4 · δ_jk`.
//!
//! The clipped `k`-bit variant saturates to `±(2^{k-1} + 1/2) Δ` outside
//! `[(1 - 2^{k-1}) Δ, (2^{k-1} - 1) Δ)` and is applied with equal levels on
//! both parts.

// Needed without std; shadowed by inherent methods when std is in the graph.
#[allow(unused_imports)]
use num_traits::Float;
use alloc::vec::Vec;

use num_complex::Complex64;
use rand::{Rng, RngCore};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::rng::{self, DITHER_STREAM};
use crate::sampling::{SampleBatch, Stage};

/// Quantization levels `(Δ_r, Δ_i)` and optional bits per real component.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuantizationSpec {
    delta_r: f64,
    delta_i: f64,
    bits: Option<u32>,
}

impl QuantizationSpec {
    /// Infinite-level quantizer. `Δ = 0` on a part leaves it unquantized.
    pub fn infinite(delta_r: f64, delta_i: f64) -> Result<Self> {
        if !(delta_r >= 0.0 && delta_i >= 0.0) || !delta_r.is_finite() || !delta_i.is_finite() {
            return Err(Error::InvalidQuantization("levels must be finite and nonnegative"));
        }
        Ok(Self {
            delta_r,
            delta_i,
            bits: None,
        })
    }

    /// `2k`-bit quantizer with level `Δ` on both parts.
    pub fn finite(delta: f64, bits: u32) -> Result<Self> {
        if !(delta > 0.0) || !delta.is_finite() {
            return Err(Error::InvalidQuantization("finite-bit level must be positive"));
        }
        if !(1..=30).contains(&bits) {
            return Err(Error::InvalidQuantization("bits per component must lie in 1..=30"));
        }
        Ok(Self {
            delta_r: delta,
            delta_i: delta,
            bits: Some(bits),
        })
    }

    /// No quantization and no dither.
    pub fn unquantized() -> Self {
        Self {
            delta_r: 0.0,
            delta_i: 0.0,
            bits: None,
        }
    }

    pub fn delta_r(&self) -> f64 {
        self.delta_r
    }

    pub fn delta_i(&self) -> f64 {
        self.delta_i
    }

    pub fn bits(&self) -> Option<u32> {
        self.bits
    }

    /// `‖Δ‖₂² = Δ_r² + Δ_i²`.
    pub fn norm_sq(&self) -> f64 {
        self.delta_r * self.delta_r + self.delta_i * self.delta_i
    }

    /// Diagonal bias `‖Δ‖₂² / 4` added by dithered quantization.
    pub fn bias(&self) -> f64 {
        self.norm_sq() / 4.0
    }

    /// The same spec with real and imaginary levels exchanged.
    pub fn swapped(&self) -> Self {
        Self {
            delta_r: self.delta_i,
            delta_i: self.delta_r,
            bits: self.bits,
        }
    }

    /// Quantizes one complex value given its (already scaled) dither.
    pub fn apply(&self, z: Complex64, dither: Complex64) -> Complex64 {
        match self.bits {
            None => quantize_complex(z, self, dither),
            Some(k) => quantize_complex_2kbit(z, self.delta_r, k, dither),
        }
    }
}

/// `Q_Δ(x) = Δ (floor(x/Δ) + 1/2)`, identity for `Δ = 0`.
#[inline]
pub fn quantize_uniform(x: f64, delta: f64) -> f64 {
    if delta == 0.0 {
        x
    } else {
        delta * ((x / delta).floor() + 0.5)
    }
}

/// Integer cell code of the clipped `k`-bit quantizer; the reconstruction is
/// `Δ (code + 1/2)`.
pub fn kbit_code(x: f64, delta: f64, bits: u32) -> i64 {
    let half = 1i64 << (bits - 1);
    let top = (half - 1) as f64 * delta;
    if x >= top {
        half
    } else if x < -top {
        -half - 1
    } else {
        (x / delta).floor() as i64
    }
}

/// Reconstruction value of a cell code.
#[inline]
pub fn code_value(code: i64, delta: f64) -> f64 {
    delta * (code as f64 + 0.5)
}

/// Clipped `k`-bit scalar quantizer.
pub fn quantize_kbit(x: f64, delta: f64, bits: u32) -> f64 {
    code_value(kbit_code(x, delta, bits), delta)
}

/// Infinite-level complex quantizer on `z + τ`.
#[inline]
pub fn quantize_complex(z: Complex64, spec: &QuantizationSpec, dither: Complex64) -> Complex64 {
    let w = z + dither;
    Complex64::new(
        quantize_uniform(w.re, spec.delta_r),
        quantize_uniform(w.im, spec.delta_i),
    )
}

/// `2k`-bit complex quantizer on `z + τ`, level `Δ` on both parts.
#[inline]
pub fn quantize_complex_2kbit(z: Complex64, delta: f64, bits: u32, dither: Complex64) -> Complex64 {
    let w = z + dither;
    Complex64::new(quantize_kbit(w.re, delta, bits), quantize_kbit(w.im, delta, bits))
}

/// Random-access source of unit triangular dither (support `[-1, 1)`).
///
/// Draw `i` is `u_a + u_b - 1` from the two uniforms stored at ChaCha word
/// position `4 i`, so any entry can be regenerated independently of the
/// order in which entries are visited.
pub struct TriangularDither {
    rng: ChaCha8Rng,
    next: u64,
}

impl TriangularDither {
    pub fn new(seed: u64) -> Self {
        Self {
            rng: rng::substream(seed, DITHER_STREAM),
            next: 0,
        }
    }

    /// Unit dither draw number `index`.
    pub fn unit(&mut self, index: u64) -> f64 {
        if index != self.next {
            self.rng.set_word_pos(u128::from(index) * 4);
        }
        let a: f64 = self.rng.random();
        let b: f64 = self.rng.random();
        self.next = index + 1;
        a + b - 1.0
    }

    /// Complex dither for flat entry `entry`, scaled by the spec's levels.
    pub fn complex(&mut self, entry: u64, spec: &QuantizationSpec) -> Complex64 {
        let re = self.unit(2 * entry);
        let im = self.unit(2 * entry + 1);
        Complex64::new(re * spec.delta_r, im * spec.delta_i)
    }

    #[doc(hidden)]
    pub fn raw_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }
}

/// `count` i.i.d. draws of `U(-Δ/2, Δ/2) + U(-Δ/2, Δ/2)`.
pub fn draw_triangular_dither(delta: f64, count: usize, seed: u64) -> Vec<f64> {
    let mut src = TriangularDither::new(seed);
    (0..count as u64).map(|i| delta * src.unit(i)).collect()
}

/// Dithered quantization of a raw batch. Entry `(l, j)` uses the dither at
/// flat index `l · |Ω| + j` of the `dither_seed` stream.
pub fn quantize_batch(raw: &SampleBatch, spec: &QuantizationSpec, dither_seed: u64) -> Result<SampleBatch> {
    if raw.stage() != Stage::Raw {
        return Err(Error::WrongStage("raw"));
    }
    let mut src = TriangularDither::new(dither_seed);
    let data = raw
        .data()
        .iter()
        .enumerate()
        .map(|(e, &z)| spec.apply(z, src.complex(e as u64, spec)))
        .collect();
    Ok(raw.with_stage(
        data,
        Stage::Quantized {
            spec: *spec,
            dither_seed,
        },
    ))
}

/// Largest `|z + τ|` over a batch for a given dither stream and level; the
/// finite-bit quantizer agrees with the infinite-level one whenever this is
/// at most `(2^{k-1} - √2) Δ`.
pub fn max_dithered_modulus(raw: &SampleBatch, spec: &QuantizationSpec, dither_seed: u64) -> f64 {
    let mut src = TriangularDither::new(dither_seed);
    raw.data()
        .iter()
        .enumerate()
        .fold(0.0_f64, |m, (e, &z)| m.max((z + src.complex(e as u64, spec)).norm()))
}

/// Level rule `Δ = C_bit · 2^{2-k} · sqrt(γ_0 (ln(n|Ω|) + δ'))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LevelRule {
    pub c_bit: f64,
    pub delta_prime: f64,
}

impl Default for LevelRule {
    fn default() -> Self {
        Self {
            c_bit: 1.0,
            delta_prime: core::f64::consts::LN_10,
        }
    }
}

impl LevelRule {
    pub fn level(&self, gamma0: f64, n: usize, ruler_size: usize, bits: u32) -> Result<f64> {
        if n == 0 || ruler_size == 0 {
            return Err(Error::InvalidArgument("n · |Ω| must be at least 1"));
        }
        self.level_for_count(gamma0, (n * ruler_size) as f64, bits)
    }

    /// Same rule with `n|Ω|` given as a real count.
    pub fn level_for_count(&self, gamma0: f64, count: f64, bits: u32) -> Result<f64> {
        if !(gamma0 > 0.0) {
            return Err(Error::NonPositiveGamma0(gamma0));
        }
        if !(count >= 1.0) {
            return Err(Error::InvalidArgument("n · |Ω| must be at least 1"));
        }
        if !(self.delta_prime >= 0.0) || !(self.c_bit > 0.0) {
            return Err(Error::InvalidArgument("level rule needs δ' >= 0 and C_bit > 0"));
        }
        if bits == 0 {
            return Err(Error::InvalidArgument("bits must be positive"));
        }
        let scale = (2.0f64).powi(2 - bits as i32);
        Ok(self.c_bit * scale * (gamma0 * (count.ln() + self.delta_prime)).sqrt())
    }
}

/// Level from the finite-bit error bound; see [`LevelRule`].
pub fn select_level_bound(
    gamma0: f64,
    n: usize,
    ruler_size: usize,
    bits: u32,
    delta_prime: f64,
    c_bit: f64,
) -> Result<f64> {
    LevelRule { c_bit, delta_prime }.level(gamma0, n, ruler_size, bits)
}

/// Data-driven level: the largest modulus in a raw batch.
pub fn select_level_datadriven(raw: &SampleBatch) -> Result<f64> {
    if raw.stage() != Stage::Raw {
        return Err(Error::WrongStage("raw"));
    }
    if raw.n() == 0 || raw.width() == 0 {
        return Err(Error::EmptyBatch);
    }
    Ok(raw.max_modulus())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ruler::Ruler;
    use alloc::vec;

    #[test]
    fn uniform_examples() {
        assert_eq!(quantize_uniform(0.3, 1.0), 0.5);
        assert_eq!(quantize_uniform(-0.7, 0.5), -0.75);
        assert_eq!(quantize_uniform(1.23, 0.0), 1.23);
        assert!(quantize_uniform(f64::NAN, 1.0).is_nan());
        // cell edges use floor semantics
        assert_eq!(quantize_uniform(2.0, 1.0), 2.5);
        assert_eq!(quantize_uniform(-0.5, 0.25), -0.375);
    }

    #[test]
    fn kbit_examples() {
        assert_eq!(quantize_kbit(0.3, 1.0, 2), 0.5);
        assert_eq!(quantize_kbit(5.0, 1.0, 2), 2.5);
        assert_eq!(quantize_kbit(1.0, 1.0, 2), 2.5);
        assert_eq!(quantize_kbit(-5.0, 1.0, 2), -2.5);
        assert_eq!(quantize_kbit(-1.0, 1.0, 2), -0.5);
        assert_eq!(quantize_kbit(-1.0001, 1.0, 2), -2.5);
    }

    #[test]
    fn kbit_alphabet_size() {
        // 2^k reconstruction levels: the cells adjacent to the clip points are absorbed.
        for k in 1..=4u32 {
            let mut codes: Vec<i64> = (-4000..4000)
                .map(|i| kbit_code(i as f64 * 0.01, 1.0, k))
                .collect();
            codes.sort_unstable();
            codes.dedup();
            assert_eq!(codes.len(), 1 << k, "k = {k}");
        }
    }

    #[test]
    fn complex_examples() {
        let z = Complex64::new(0.3, -0.7);
        let zero = Complex64::new(0.0, 0.0);
        assert_eq!(quantize_complex(z, &QuantizationSpec::unquantized(), zero), z);
        let spec = QuantizationSpec::infinite(1.0, 0.5).unwrap();
        assert_eq!(quantize_complex(z, &spec, zero), Complex64::new(0.5, -0.75));
        assert_eq!(
            quantize_complex_2kbit(Complex64::new(10.0, 10.0), 1.0, 2, zero),
            Complex64::new(2.5, 2.5)
        );
    }

    #[test]
    fn spec_validation() {
        assert!(QuantizationSpec::infinite(-1.0, 0.0).is_err());
        assert!(QuantizationSpec::infinite(f64::NAN, 0.0).is_err());
        assert!(QuantizationSpec::finite(0.0, 2).is_err());
        assert!(QuantizationSpec::finite(1.0, 0).is_err());
        let s = QuantizationSpec::infinite(3.0, 4.0).unwrap();
        assert_eq!(s.norm_sq(), 25.0);
        assert_eq!(s.bias(), 6.25);
        assert_eq!(s.swapped().delta_r(), 4.0);
    }

    #[test]
    fn zero_level_dither_is_zero() {
        assert!(draw_triangular_dither(0.0, 100, 4).iter().all(|&x| x == 0.0));
        let d = draw_triangular_dither(2.0, 1000, 4);
        assert!(d.iter().all(|&x| (-2.0..=2.0).contains(&x)));
    }

    #[test]
    fn dither_is_random_access() {
        let mut seq = TriangularDither::new(9);
        let forward: Vec<f64> = (0..10).map(|i| seq.unit(i)).collect();
        let mut jump = TriangularDither::new(9);
        assert_eq!(jump.unit(7), forward[7]);
        assert_eq!(jump.unit(2), forward[2]);
        assert_eq!(jump.unit(3), forward[3]);
    }

    #[test]
    fn bound_level_examples() {
        let rule = LevelRule {
            c_bit: 1.0,
            delta_prime: 0.0,
        };
        let e = core::f64::consts::E;
        assert!((rule.level_for_count(1.0, e, 2).unwrap() - 1.0).abs() < 1e-15);
        let a = rule.level(2.0, 100, 7, 3).unwrap();
        let b = rule.level(2.0, 100, 7, 4).unwrap();
        assert!((a / b - 2.0).abs() < 1e-12);
        let c = rule.level(4.0, 100, 7, 3).unwrap();
        assert!((c / a - 2f64.sqrt()).abs() < 1e-12);
        assert_eq!(
            rule.level(0.0, 10, 2, 2),
            Err(Error::NonPositiveGamma0(0.0))
        );
        assert_eq!(
            select_level_bound(1.0, 10, 2, 2, LevelRule::default().delta_prime, 1.0).unwrap(),
            LevelRule::default().level(1.0, 10, 2, 2).unwrap()
        );
    }

    #[test]
    fn datadriven_level_examples() {
        let r = Ruler::full(2);
        let b = SampleBatch::new(
            r.clone(),
            1,
            vec![Complex64::new(3.0, 0.0), Complex64::new(0.0, -4.0)],
            Stage::Raw,
            0,
        )
        .unwrap();
        assert_eq!(select_level_datadriven(&b).unwrap(), 4.0);
        let z = SampleBatch::new(r.clone(), 1, vec![Complex64::new(0.0, 0.0); 2], Stage::Raw, 0).unwrap();
        assert_eq!(select_level_datadriven(&z).unwrap(), 0.0);
        let empty = SampleBatch::new(r, 0, vec![], Stage::Raw, 0).unwrap();
        assert_eq!(select_level_datadriven(&empty), Err(Error::EmptyBatch));
    }
}

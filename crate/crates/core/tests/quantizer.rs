mod common;

use common::*;
use num_complex::Complex64;
use proptest::prelude::*;
use qtcov_core::estimators::{qtscm, quantized_sample_covariance};
use qtcov_core::quantizer::{
    draw_triangular_dither, max_dithered_modulus, quantize_batch, quantize_kbit, quantize_uniform,
    select_level_datadriven, TriangularDither,
};
use qtcov_core::sampling::{random_toeplitz_covariance, sample_complex_gaussian};
use qtcov_core::{HermitianToeplitz, QuantizationSpec, Ruler};
use rand::Rng;
use rand_distr::StandardNormal;

#[test]
fn dither_moments() {
    let delta = 2.0;
    let draws = draw_triangular_dither(delta, 1_000_000, 1);
    let n = draws.len() as f64;
    let mean = draws.iter().sum::<f64>() / n;
    let var = draws.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    assert!(mean.abs() < 0.005, "{mean}");
    let target = delta * delta / 6.0;
    assert!((var / target - 1.0).abs() < 0.01, "{var} vs {target}");
    assert!(draws.iter().all(|x| x.abs() <= delta));
}

#[test]
fn quantization_noise_second_moment() {
    let delta = 0.8;
    let n = 1_000_000;
    let mut rng = rng(5);
    let mut dither = TriangularDither::new(6);
    let mut acc = 0.0;
    for i in 0..n {
        let x: f64 = rng.sample(StandardNormal);
        let xq = quantize_uniform(x + delta * dither.unit(i), delta);
        acc += (xq - x).powi(2);
    }
    let m = acc / n as f64;
    let target = delta * delta / 4.0;
    assert!((m / target - 1.0).abs() < 0.01, "{m} vs {target}");
}

#[test]
fn dithered_second_moment_is_shifted_by_bias() {
    let d = 4;
    let t = random_toeplitz_covariance(d, 31).scale(1.0);
    let t = t.scale(1.0 / t.gamma0());
    let spec = QuantizationSpec::infinite(1.0, 1.0).unwrap();
    for n in [10_000, 100_000] {
        let raw = sample_complex_gaussian(&t, &Ruler::full(d), n, 40).unwrap();
        let q = quantize_batch(&raw, &spec, 41).unwrap();
        let r = quantized_sample_covariance(&q).unwrap();
        let expected = t.shift_diagonal(spec.bias()).to_dense();
        let worst = max_abs_diff(&r, &expected);
        assert!(worst < 5.0 / (n as f64).sqrt(), "n = {n}: {worst}");
    }
}

#[test]
fn cell_edges_use_floor() {
    let delta = 0.25;
    for m in -20i32..20 {
        let x = m as f64 * delta;
        assert_eq!(quantize_uniform(x, delta), delta * (m as f64 + 0.5));
    }
}

#[test]
fn clipped_quantizer_replays_unclipped_one() {
    let d = 6;
    let k = 3;
    let ruler = Ruler::full(d);
    let t = HermitianToeplitz::identity(d).scale(0.2);
    let raw = sample_complex_gaussian(&t, &ruler, 200, 12).unwrap();
    let delta = 1.0;
    let finite = QuantizationSpec::finite(delta, k).unwrap();
    let infinite = QuantizationSpec::infinite(delta, delta).unwrap();
    let limit = (2f64.powi(k as i32 - 1) - 2f64.sqrt()) * delta;
    assert!(max_dithered_modulus(&raw, &infinite, 13) <= limit);
    let a = qtscm(&quantize_batch(&raw, &finite, 13).unwrap()).unwrap();
    let b = qtscm(&quantize_batch(&raw, &infinite, 13).unwrap()).unwrap();
    assert_eq!(a, b);
}

#[test]
fn datadriven_level_on_unit_gaussian() {
    let ruler = Ruler::full(10);
    let mut inside = 0;
    let runs = 200;
    for seed in 0..runs {
        let b = sample_complex_gaussian(&HermitianToeplitz::identity(10), &ruler, 1000, seed).unwrap();
        let level = select_level_datadriven(&b).unwrap();
        if (2.5..=5.5).contains(&level) {
            inside += 1;
        }
    }
    assert!(inside as f64 >= 0.99 * runs as f64, "{inside}/{runs}");
}

#[test]
fn quantized_batches_keep_their_spec() {
    let raw = sample_complex_gaussian(&HermitianToeplitz::identity(3), &Ruler::full(3), 5, 1).unwrap();
    let spec = QuantizationSpec::finite(0.5, 2).unwrap();
    let q = quantize_batch(&raw, &spec, 2).unwrap();
    assert_eq!(q.spec(), Some(spec));
    assert!(quantize_batch(&q, &spec, 2).is_err());
    for z in q.data() {
        for v in [z.re, z.im] {
            let code = v / 0.5 - 0.5;
            assert_eq!(code, code.round());
            assert!((-3.0..=2.0).contains(&code));
        }
    }
    let _: Complex64 = q.data()[0];
}

proptest! {
    #[test]
    fn uniform_error_is_at_most_half_a_cell(x in -1e3..1e3f64, delta in 1e-3..10.0f64) {
        prop_assert!((quantize_uniform(x, delta) - x).abs() <= delta / 2.0 * (1.0 + 1e-12));
    }

    #[test]
    fn kbit_agrees_inside_range(x in -1e3..1e3f64, delta in 1e-2..10.0f64, k in 1u32..8) {
        let top = (2f64.powi(k as i32 - 1) - 1.0) * delta;
        if x.abs() < top {
            prop_assert_eq!(quantize_kbit(x, delta, k), quantize_uniform(x, delta));
        } else {
            let sat = (2f64.powi(k as i32 - 1) + 0.5) * delta;
            prop_assert!((quantize_kbit(x, delta, k).abs() - sat).abs() < 1e-9 * sat || x.abs() < top + delta);
        }
    }

    #[test]
    fn dither_access_order_is_irrelevant(seed in any::<u64>(), idx in prop::collection::vec(0u64..500, 1..40)) {
        let mut seq = TriangularDither::new(seed);
        let reference: Vec<f64> = (0..500).map(|i| seq.unit(i)).collect();
        let mut jump = TriangularDither::new(seed);
        for i in idx {
            prop_assert_eq!(jump.unit(i), reference[i as usize]);
        }
    }
}

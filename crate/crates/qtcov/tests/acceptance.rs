//! Acceptance criteria. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any fails.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use num_complex::Complex64;
use qtcov::config::{ConfigFile, ExperimentConfig, Profile};
use qtcov::pipeline::estimate_with_solution;
use qtcov::rulers::parse_ruler;
use qtcov::runner::run_experiment;
use qtcov::table::Summary;
use qtcov::{ResultTable, Row};
use qtcov_core::estimators::{qtscm, quantized_sample_covariance};
use qtcov_core::qspa::{qspa_objective, qspa_solve, regularize_sample_cov};
use qtcov_core::quantizer::{
    draw_triangular_dither, max_dithered_modulus, quantize_batch, quantize_uniform, TriangularDither,
};
use qtcov_core::sampling::{random_toeplitz_covariance, sample_complex_gaussian};
use qtcov_core::{Estimate, EstimatorKind, GaussianSampler, HermitianToeplitz, QspaOptions, QuantizationSpec, Ruler};

type Outcome = Result<String, String>;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn config(text: &str) -> ExperimentConfig {
    ConfigFile::parse(text)
        .and_then(|f| f.resolve(Profile::Full))
        .expect("acceptance config")
}

fn summary(t: &ResultTable, pred: impl Fn(&Row) -> bool) -> Summary {
    t.summary(pred).expect("grid point present")
}

fn combined(a: Summary, b: Summary) -> f64 {
    (a.se * a.se + b.se * b.se).sqrt()
}

fn coverage() -> Outcome {
    let a = parse_ruler("A", 16).unwrap().ruler.coverage_coefficient();
    let b = parse_ruler("B", 16).unwrap().ruler.coverage_coefficient();
    check(
        (a - 10.70).abs() <= 0.01 && (b - 7.11).abs() <= 0.01,
        format!("phi(A) = {a:.4}, phi(B) = {b:.4}"),
    )
}

fn unbiasedness() -> Outcome {
    let d = 8;
    let trials = 400u64;
    let truth = random_toeplitz_covariance(d, 2024);
    let ruler = Ruler::full(d);
    let spec = QuantizationSpec::infinite(2.0, 2.0).unwrap();
    let sampler = GaussianSampler::new(&truth, &ruler).unwrap();
    let mut sum = vec![[0.0f64; 2]; d];
    let mut sq = vec![[0.0f64; 2]; d];
    for t in 0..trials {
        let raw = sampler.sample(500, 1000 + t).unwrap();
        let est = qtscm(&quantize_batch(&raw, &spec, 1000 + t).unwrap()).unwrap();
        for (s, g) in est.generators().iter().enumerate() {
            for (c, v) in [g.re, g.im].into_iter().enumerate() {
                sum[s][c] += v;
                sq[s][c] += v * v;
            }
        }
    }
    let n = trials as f64;
    let mut worst: f64 = 0.0;
    for (s, g) in truth.generators().iter().enumerate() {
        for (c, want) in [g.re, g.im].into_iter().enumerate() {
            let mean = sum[s][c] / n;
            let var = (sq[s][c] - n * mean * mean) / (n - 1.0);
            let se = (var.max(0.0) / n).sqrt();
            let z = if se > 0.0 {
                (mean - want).abs() / se
            } else if mean == want {
                0.0
            } else {
                f64::INFINITY
            };
            worst = worst.max(z);
        }
    }
    check(worst < 5.0, format!("largest deviation {worst:.2} standard errors over {} lags", d))
}

fn log_slope(points: &[(f64, f64)]) -> f64 {
    let xs: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let mx = xs.iter().sum::<f64>() / xs.len() as f64;
    let my = ys.iter().sum::<f64>() / ys.len() as f64;
    let num: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let den: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    num / den
}

fn rate() -> Outcome {
    let cfg = config(
        "schema = 1\nd = 16\nrulers = [\"full\", \"half:alpha=0.5\"]\ndelta = 1\nn = [100, 1000, 10000]\ntrials = 100\nseed = 3",
    );
    let t = run_experiment(&cfg).unwrap();
    let mut parts = Vec::new();
    let mut ok = true;
    for ruler in ["full", "half"] {
        let pts: Vec<(f64, f64)> = t
            .means()
            .filter(|r| r.ruler == ruler)
            .map(|r| (r.n as f64, r.value))
            .collect();
        let s = log_slope(&pts);
        ok &= pts.len() == 3 && (-0.6..=-0.4).contains(&s);
        parts.push(format!("{ruler} slope {s:.3}"));
    }
    check(ok, parts.join(", "))
}

fn ruler_ordering() -> Outcome {
    let cfg = config(
        "schema = 1\nd = 16\nrulers = [\"A\", \"B\", \"half:alpha=0.5\"]\ndelta = 1\nn = 1000\ntrials = 100\nseed = 4",
    );
    let t = run_experiment(&cfg).unwrap();
    let [a, b, h] = ["A", "B", "half"].map(|l| summary(&t, |r| r.ruler == l));
    let gap_ba = a.mean - b.mean;
    let gap_ah = h.mean - a.mean;
    check(
        gap_ba > 2.0 * combined(a, b) && gap_ah > 2.0 * combined(a, h),
        format!(
            "B {:.4} < A {:.4} < half {:.4}; gaps {:.1} and {:.1} combined SE",
            b.mean,
            a.mean,
            h.mean,
            gap_ba / combined(a, b),
            gap_ah / combined(a, h)
        ),
    )
}

fn quantization_symmetry() -> Outcome {
    let cfg = config(
        "schema = 1\nd = 16\nrulers = [\"full\"]\ndelta_grid = [0, 1, 2, 4, 6, 8]\nn = 500\ntrials = 100\nseed = 5",
    );
    let t = run_experiment(&cfg).unwrap();
    let at = |dr: f64, di: f64| summary(&t, |r| r.delta_r == dr && r.delta_i == di);
    let grid = [0.0, 1.0, 2.0, 4.0, 6.0, 8.0];
    let mut worst: f64 = 0.0;
    for &dr in &grid {
        for &di in &grid {
            let (p, q) = (at(dr, di), at(di, dr));
            if dr != di {
                worst = worst.max((p.mean - q.mean).abs() / combined(p, q));
            }
        }
    }
    let norm8 = [at(8.0, 0.0), at(0.0, 8.0)];
    let norm2 = [at(2.0, 0.0), at(0.0, 2.0)];
    let grows = norm8.iter().all(|a| norm2.iter().all(|b| a.mean > b.mean));
    check(
        worst < 3.0 && grows,
        format!(
            "worst asymmetry {worst:.2} combined SE; |Δ|=8 {:.4} vs |Δ|=2 {:.4}",
            norm8[0].mean, norm2[0].mean
        ),
    )
}

fn finite_bit_equivalence() -> Outcome {
    let batches = 1000u64;
    let mut checked = 0;
    for b in 0..batches {
        let d = 2 + (b % 7) as usize;
        let k = 3 + (b % 4) as u32;
        let ruler = if b % 2 == 0 { Ruler::full(d) } else { Ruler::alpha(d, 0.5).unwrap() };
        let t = random_toeplitz_covariance(d, b);
        let raw = sample_complex_gaussian(&t, &ruler, 5 + (b % 50) as usize, b).unwrap();
        let limit = 2f64.powi(k as i32 - 1) - 2f64.sqrt();
        let mut delta = raw.max_modulus() / limit;
        while max_dithered_modulus(&raw, &QuantizationSpec::infinite(delta, delta).unwrap(), b) > limit * delta {
            delta *= 1.1;
        }
        let finite = qtscm(&quantize_batch(&raw, &QuantizationSpec::finite(delta, k).unwrap(), b).unwrap()).unwrap();
        let infinite =
            qtscm(&quantize_batch(&raw, &QuantizationSpec::infinite(delta, delta).unwrap(), b).unwrap()).unwrap();
        let same = finite
            .generators()
            .iter()
            .zip(infinite.generators())
            .all(|(x, y)| x.re.to_bits() == y.re.to_bits() && x.im.to_bits() == y.im.to_bits());
        if !same {
            return Err(format!("batch {b} (d={d}, k={k}) differs"));
        }
        checked += 1;
    }
    Ok(format!("{checked} batches identical"))
}

fn bit_plateau() -> Outcome {
    let cfg = config(
        "schema = 1\nd = 16\nrulers = [\"full\"]\nbits = [2, 3, 4, 5, 6]\nlevel_rule = { kind = \"bound\" }\ninclude_unquantized = true\nn = 500\ntrials = 100\nseed = 7\nestimators = [\"2k-tscm\"]",
    );
    let t = run_experiment(&cfg).unwrap();
    let by_k: Vec<Summary> = (2..=6).map(|k| summary(&t, |r| r.k == Some(k))).collect();
    let inf = summary(&t, |r| r.k.is_none());
    let monotone = by_k
        .windows(2)
        .all(|w| w[1].mean <= w[0].mean + 2.0 * combined(w[0], w[1]));
    let k6 = by_k[4];
    let plateau = k6.mean - inf.mean < k6.se;
    let means: Vec<String> = by_k.iter().map(|s| format!("{:.4}", s.mean)).collect();
    check(
        monotone && plateau,
        format!("k=2..6: {}; infinite {:.4}; SE(k=6) {:.4}", means.join(" "), inf.mean, k6.se),
    )
}

/// Closed-form two-trace objective for 2×2 Hermitian matrices.
fn objective_2x2(u0: f64, u1: Complex64, r: &[[Complex64; 2]; 2]) -> f64 {
    let inv = |m: [[Complex64; 2]; 2]| {
        let det = (m[0][0] * m[1][1] - m[0][1] * m[1][0]).re;
        [[m[1][1] / det, -m[0][1] / det], [-m[1][0] / det, m[0][0] / det]]
    };
    let t = [[Complex64::new(u0, 0.0), u1], [u1.conj(), Complex64::new(u0, 0.0)]];
    let tr = |a: [[Complex64; 2]; 2], b: [[Complex64; 2]; 2]| {
        (a[0][0] * b[0][0] + a[0][1] * b[1][0] + a[1][0] * b[0][1] + a[1][1] * b[1][1]).re
    };
    tr(inv(*r), t) + tr(inv(t), *r)
}

/// Shrinking grid search over `u0 = shift + |u1| + t`, `t ≥ 0`.
fn brute_force_2x2(r: &[[Complex64; 2]; 2], shift: f64) -> f64 {
    let scale = r[0][0].re.max(r[1][1].re);
    let (mut tc, mut ac, mut bc) = (scale, 0.0, 0.0);
    let mut w = 2.0 * scale;
    let steps = 24;
    let mut best = f64::INFINITY;
    for _ in 0..14 {
        let (mut bt, mut ba, mut bb) = (tc, ac, bc);
        for i in 0..=steps {
            let t = (tc - w + 2.0 * w * i as f64 / steps as f64).max(0.0);
            for j in 0..=steps {
                let a = ac - w + 2.0 * w * j as f64 / steps as f64;
                for k in 0..=steps {
                    let b = bc - w + 2.0 * w * k as f64 / steps as f64;
                    let u1 = Complex64::new(a, b);
                    let u0 = shift + u1.norm() + t;
                    if u0 - u1.norm() <= 0.0 {
                        continue;
                    }
                    let f = objective_2x2(u0, u1, r);
                    if f < best {
                        best = f;
                        (bt, ba, bb) = (t, a, b);
                    }
                }
            }
        }
        (tc, ac, bc) = (bt, ba, bb);
        w *= 0.35;
    }
    best
}

fn qspa() -> Outcome {
    // (b) two-by-two instances against the grid oracle
    let spec = QuantizationSpec::infinite(1.0, 1.0).unwrap();
    let mut worst_gap: f64 = 0.0;
    for inst in 0..20u64 {
        let t = random_toeplitz_covariance(2, 500 + inst);
        let raw = sample_complex_gaussian(&t, &Ruler::full(2), 4, 600 + inst).unwrap();
        let rhat = quantized_sample_covariance(&raw).unwrap();
        let r = [[rhat[(0, 0)], rhat[(0, 1)]], [rhat[(1, 0)], rhat[(1, 1)]]];
        let sol = qspa_solve(&rhat, 4, &Ruler::full(2), &spec, &QspaOptions::default()).unwrap();
        let own = objective_2x2(sol.u[0].re, sol.u[1], &r);
        worst_gap = worst_gap.max((own - brute_force_2x2(&r, spec.bias())).abs());
    }

    // (a) and (c) on the large configuration
    let d = 16;
    let n = 10_000;
    let ruler = Ruler::full(d);
    let spec = QuantizationSpec::infinite(5.0, 5.0).unwrap();
    let opts = QspaOptions::default();
    let trials = 100u64;
    let (mut e_spa, mut e_tscm) = (Vec::new(), Vec::new());
    let mut violations = 0;
    for t in 0..trials {
        let truth = random_toeplitz_covariance(d, 9 ^ t);
        let raw = GaussianSampler::new(&truth, &ruler).unwrap().sample(n, 9 ^ t).unwrap();
        let batch = quantize_batch(&raw, &spec, 9 ^ t).unwrap();
        let (est, sol) = estimate_with_solution(&batch, EstimatorKind::Qspa, &opts).unwrap();
        let sol = sol.unwrap();
        let rhat = regularize_sample_cov(&quantized_sample_covariance(&batch).unwrap(), sol.epsilon_reg);
        let f = qspa_objective(&sol.u, &rhat, &ruler).unwrap();
        let feasible = sol.t_breve.min_eigenvalue() >= -1e-8 * sol.u[0].re;
        if !feasible || f < 2.0 * ruler.len() as f64 * (1.0 - 1e-12) {
            violations += 1;
        }
        e_spa.push(est.relative_error(&truth).unwrap());
        e_tscm.push(Estimate::Toeplitz(qtscm(&batch).unwrap()).relative_error(&truth).unwrap());
    }
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let (m_spa, m_tscm) = (mean(&e_spa), mean(&e_tscm));
    check(
        violations == 0 && worst_gap < 1e-4 && m_spa <= m_tscm,
        format!(
            "(a) {violations} violations; (b) worst oracle gap {worst_gap:.2e}; (c) Q-SPA {m_spa:.5} vs Q-TSCM {m_tscm:.5}"
        ),
    )
}

fn doa() -> Outcome {
    let cfg = config(
        "schema = 1\nexperiment = \"exp5\"\nrulers = [\"half:alpha=0.5\"]\nn = [1000, 10000]\ntrials = 50\nseed = 8\nestimators = [\"qtscm\", \"qspa\"]",
    );
    let t = run_experiment(&cfg).unwrap();
    let at = |est: &str, n: usize| summary(&t, |r| r.estimator == est && r.n == n);
    let (spa3, spa4) = (at("Q-SPA", 1000), at("Q-SPA", 10_000));
    let (ts3, ts4) = (at("Q-TSCM", 1000), at("Q-TSCM", 10_000));
    let ordering = spa4.mean < ts4.mean;
    let decreasing = spa4.mean <= spa3.mean + 2.0 * combined(spa3, spa4)
        && ts4.mean <= ts3.mean + 2.0 * combined(ts3, ts4);
    check(
        ordering && decreasing,
        format!(
            "n=1e3: Q-SPA {:.3e}, Q-TSCM {:.3e}; n=1e4: Q-SPA {:.3e}, Q-TSCM {:.3e}",
            spa3.mean, ts3.mean, spa4.mean, ts4.mean
        ),
    )
}

fn micro_properties() -> Outcome {
    let delta = 0.8;
    let draws = 1_000_000;

    let dither = draw_triangular_dither(delta, draws, 1);
    let n = draws as f64;
    let mean = dither.iter().sum::<f64>() / n;
    let var = dither.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    let var_ratio = var / (delta * delta / 6.0);

    // real and imaginary parts of unit-variance complex samples
    let x = sample_complex_gaussian(&HermitianToeplitz::identity(1).scale(2.0), &Ruler::full(1), draws / 2, 2).unwrap();
    let mut stream = TriangularDither::new(3);
    let mut acc = 0.0;
    for (i, v) in x.data().iter().flat_map(|z| [z.re, z.im]).enumerate() {
        let q = quantize_uniform(v + delta * stream.unit(i as u64), delta);
        acc += (q - v).powi(2);
    }
    let noise_ratio = acc / n / (delta * delta / 4.0);

    let d = 4;
    let t = random_toeplitz_covariance(d, 31);
    let t = t.scale(1.0 / t.gamma0());
    let spec = QuantizationSpec::infinite(1.0, 1.0).unwrap();
    let samples = 100_000;
    let raw = sample_complex_gaussian(&t, &Ruler::full(d), samples, 40).unwrap();
    let r = quantized_sample_covariance(&quantize_batch(&raw, &spec, 41).unwrap()).unwrap();
    let expected = t.shift_diagonal(spec.bias()).to_dense();
    let bias_dev = (0..d)
        .flat_map(|j| (0..d).map(move |k| (j, k)))
        .map(|(j, k)| (r[(j, k)] - expected[(j, k)]).norm())
        .fold(0.0, f64::max);
    let bias_tol = 5.0 / (samples as f64).sqrt();

    check(
        (noise_ratio - 1.0).abs() < 0.01 && (var_ratio - 1.0).abs() < 0.01 && bias_dev < bias_tol,
        format!(
            "noise moment ratio {noise_ratio:.4}, dither variance ratio {var_ratio:.4}, bias deviation {bias_dev:.4} (tol {bias_tol:.4})"
        ),
    )
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome, u64); 10] = [
        ("coverage coefficients", coverage, 1),
        ("unbiasedness", unbiasedness, 60),
        ("error rate in n", rate, 300),
        ("ruler ordering", ruler_ordering, 120),
        ("quantization symmetry and growth", quantization_symmetry, 300),
        ("finite-bit equivalence", finite_bit_equivalence, 30),
        ("bit-sweep plateau", bit_plateau, 300),
        ("Q-SPA correctness", qspa, 600),
        ("DOA recovery", doa, 600),
        ("dither and quantizer moments", micro_properties, 30),
    ];
    let mut failed = 0;
    for (i, (name, run, limit)) in criteria.into_iter().enumerate() {
        let start = Instant::now();
        let outcome = run();
        let elapsed = start.elapsed();
        let in_time = elapsed <= Duration::from_secs(limit);
        let (status, detail) = match (&outcome, in_time) {
            (Ok(d), true) => ("PASS", d.clone()),
            (Ok(d), false) => ("FAIL", format!("{d}; over the {limit} s budget")),
            (Err(d), _) => ("FAIL", d.clone()),
        };
        if status == "FAIL" {
            failed += 1;
        }
        println!("{status} {:>2} {name}: {detail} [{:.1} s]", i + 1, elapsed.as_secs_f64());
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    }
}

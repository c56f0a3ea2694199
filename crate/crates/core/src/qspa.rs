//! Covariance fitting over Toeplitz generators with a shifted PSD constraint.
//!
//! Solves
//!
//! ```text
//! minimize   tr(R̂⁻¹ R) + tr(R⁻¹ R̂),   R = T(u) restricted to the ruler
//! subject to T(u) ⪰ c I_d,             c = ‖Δ‖² / 4
//! ```
//!
//! and returns `T(ŭ) - c I`. The objective equals
//! `‖R^{-1/2} (R̂ - R) R̂^{-1/2}‖_F² + 2|Ω|`. Instead of lifting to an SDP the
//! problem is solved directly in the `2d - 1` real generator coordinates with
//! a log-barrier path-following Newton method:
//!
//! ```text
//! F_μ(x) = f(x) - μ log det(T(x) - c I) - μ log det(T(x)_Ω)
//! ```
//!
//! Coordinates are `x_0 = u_0`, `x_{2s-1} = Re u_s`, `x_{2s} = Im u_s`.

// Needed without std; shadowed by inherent methods when std is in the graph.
#[allow(unused_imports)]
use num_traits::Float;
use alloc::vec;
use alloc::vec::Vec;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix};
use crate::quantizer::QuantizationSpec;
use crate::ruler::Ruler;
use crate::toeplitz::{toeplitz_adjoint_project, HermitianToeplitz};

/// Diagonal loading applied to `R̂` before inversion.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Regularization {
    /// [`auto_regularization`] based on the sample count and `λ_min(R̂)`.
    Auto,
    Fixed(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QspaOptions {
    pub epsilon_reg: Regularization,
    pub barrier_mu0: f64,
    pub barrier_shrink: f64,
    pub newton_tol: f64,
    pub max_outer: usize,
    pub max_inner: usize,
}

impl Default for QspaOptions {
    fn default() -> Self {
        Self {
            epsilon_reg: Regularization::Auto,
            barrier_mu0: 1.0,
            barrier_shrink: 0.2,
            newton_tol: 1e-8,
            max_outer: 40,
            max_inner: 50,
        }
    }
}

impl QspaOptions {
    fn validate(&self) -> Result<()> {
        if let Regularization::Fixed(e) = self.epsilon_reg {
            if !(e >= 0.0) || !e.is_finite() {
                return Err(Error::InvalidArgument("epsilon_reg must be finite and nonnegative"));
            }
        }
        if !(self.barrier_mu0 > 0.0) || !self.barrier_mu0.is_finite() {
            return Err(Error::InvalidArgument("barrier_mu0 must be positive"));
        }
        if !(self.barrier_shrink > 0.0 && self.barrier_shrink < 1.0) {
            return Err(Error::InvalidArgument("barrier_shrink must lie in (0, 1)"));
        }
        if !(self.newton_tol > 0.0) {
            return Err(Error::InvalidArgument("newton_tol must be positive"));
        }
        if self.max_outer == 0 || self.max_inner == 0 {
            return Err(Error::InvalidArgument("iteration limits must be positive"));
        }
        Ok(())
    }
}

/// One outer (centering) iteration of the path-following method.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRow {
    pub iteration: usize,
    pub mu: f64,
    pub objective: f64,
    pub kkt_residual: f64,
}

#[derive(Debug, Clone)]
pub struct QspaSolution {
    /// Solved generators `ŭ` of `T(ŭ)`, bias included.
    pub u: Vec<Complex64>,
    /// Two-trace objective at `ŭ`.
    pub objective: f64,
    /// Newton decrement of the last centering step.
    pub kkt_residual: f64,
    /// Total Newton steps.
    pub iterations: usize,
    pub outer_iterations: usize,
    pub converged: bool,
    /// Diagonal loading actually applied to `R̂`.
    pub epsilon_reg: f64,
    /// `T(ŭ) - (‖Δ‖²/4) I`, the covariance estimate.
    pub t_breve: HermitianToeplitz,
    pub trace: Vec<TraceRow>,
}

/// `R̂ + ε I`.
pub fn regularize_sample_cov(rhat: &CMatrix, epsilon: f64) -> CMatrix {
    let mut r = rhat.clone();
    for a in 0..r.nrows() {
        r[(a, a)].re += epsilon;
    }
    r
}

/// Diagonal loading for `R̂`: with `τ = tr(R̂)/|Ω|`,
/// `ε = max(0, 1e-8 τ - λ_min) + 1e-10 τ` when `n < 2|Ω|` or
/// `λ_min < 1e-10 tr(R̂)`, else zero.
pub fn auto_regularization(rhat: &CMatrix, n: usize) -> Result<f64> {
    let m = rhat.nrows();
    if m == 0 {
        return Ok(0.0);
    }
    let tr = linalg::trace_re(rhat);
    let tau = tr / m as f64;
    let lmin = linalg::hermitian_eigenvalues(rhat)?[0];
    if n < 2 * m || lmin < 1e-10 * tr {
        Ok((1e-8 * tau - lmin).max(0.0) + 1e-10 * tau)
    } else {
        Ok(0.0)
    }
}

fn check_square(m: &CMatrix, expected: usize) -> Result<()> {
    if m.nrows() != expected || m.ncols() != expected {
        return Err(Error::SizeMismatch {
            rows: m.nrows(),
            cols: m.ncols(),
            expected,
        });
    }
    Ok(())
}

fn restrict_generators(u: &[Complex64], ruler: &Ruler) -> CMatrix {
    let idx = ruler.indices();
    CMatrix::from_fn(idx.len(), idx.len(), |a, b| {
        let (j, k) = (idx[a], idx[b]);
        if k >= j {
            u[k - j]
        } else {
            u[j - k].conj()
        }
    })
}

/// `tr(R̂⁻¹ R) + tr(R⁻¹ R̂)` with `R = T(u)` on the ruler.
pub fn qspa_objective(u: &[Complex64], rhat: &CMatrix, ruler: &Ruler) -> Result<f64> {
    if u.len() != ruler.dim() {
        return Err(Error::LengthMismatch {
            expected: ruler.dim(),
            actual: u.len(),
        });
    }
    check_square(rhat, ruler.len())?;
    let rhat_inv = linalg::hpd_inverse(rhat).ok_or(Error::SingularRhat)?;
    let r = restrict_generators(u, ruler);
    let r_inv = linalg::hpd_inverse(&r).ok_or(Error::InfeasibleU)?;
    Ok(linalg::trace_product_re(&rhat_inv, &r) + linalg::trace_product_re(&r_inv, rhat))
}

/// `‖R^{-1/2} (R̂ - R) R̂^{-1/2}‖_F²`, evaluated with eigen-based square roots.
pub fn qspa_frobenius_objective(u: &[Complex64], rhat: &CMatrix, ruler: &Ruler) -> Result<f64> {
    if u.len() != ruler.dim() {
        return Err(Error::LengthMismatch {
            expected: ruler.dim(),
            actual: u.len(),
        });
    }
    check_square(rhat, ruler.len())?;
    let r = restrict_generators(u, ruler);
    let rhat_isqrt = inverse_sqrt(rhat).ok_or(Error::SingularRhat)?;
    let r_isqrt = inverse_sqrt(&r).ok_or(Error::InfeasibleU)?;
    let m = r_isqrt * (rhat - &r) * rhat_isqrt;
    Ok(m.iter().map(|z| z.norm_sqr()).sum())
}

fn inverse_sqrt(m: &CMatrix) -> Option<CMatrix> {
    let eig = linalg::hermitian_eigen(m).ok()?;
    if eig.values.iter().any(|&v| !(v > 0.0)) {
        return None;
    }
    let mut scaled = eig.vectors.clone();
    for (k, &v) in eig.values.iter().enumerate() {
        let w = 1.0 / v.sqrt();
        for i in 0..scaled.nrows() {
            scaled[(i, k)] *= w;
        }
    }
    Some(&scaled * eig.vectors.adjoint())
}

/// Sparse Hermitian basis matrix: entries `(row, col, value)`.
type Basis = Vec<(usize, usize, Complex64)>;

fn full_basis(d: usize) -> Vec<Basis> {
    let one = Complex64::new(1.0, 0.0);
    let i = Complex64::new(0.0, 1.0);
    let mut out = Vec::with_capacity(2 * d - 1);
    out.push((0..d).map(|j| (j, j, one)).collect());
    for s in 1..d {
        out.push((0..d - s).flat_map(|j| [(j, j + s, one), (j + s, j, one)]).collect());
        out.push((0..d - s).flat_map(|j| [(j, j + s, i), (j + s, j, -i)]).collect());
    }
    out
}

fn ruler_basis(ruler: &Ruler) -> Vec<Basis> {
    let one = Complex64::new(1.0, 0.0);
    let i = Complex64::new(0.0, 1.0);
    let pairs = ruler.position_pairs();
    let mut out = Vec::with_capacity(2 * ruler.dim() - 1);
    out.push(pairs[0].iter().map(|&(a, _)| (a, a, one)).collect());
    for lag in &pairs[1..] {
        out.push(lag.iter().flat_map(|&(a, b)| [(a, b, one), (b, a, one)]).collect());
        out.push(lag.iter().flat_map(|&(a, b)| [(a, b, i), (b, a, -i)]).collect());
    }
    out
}

/// `Re tr(W B)` for sparse `B`.
fn trace_with_basis(w: &CMatrix, b: &Basis) -> f64 {
    b.iter()
        .map(|&(r, c, v)| {
            let x = w[(c, r)];
            x.re * v.re - x.im * v.im
        })
        .sum()
}

/// `B · M` for sparse `B`.
fn basis_times(b: &Basis, m: &CMatrix) -> CMatrix {
    let mut out = CMatrix::zeros(m.nrows(), m.ncols());
    for &(r, c, v) in b {
        for k in 0..m.ncols() {
            out[(r, k)] += v * m[(c, k)];
        }
    }
    out
}

/// Barrier objective, gradient and Hessian at one point.
#[derive(Debug, Clone)]
pub struct BarrierEval {
    pub value: f64,
    pub objective: f64,
    pub gradient: Vec<f64>,
    pub hessian: Option<DMatrix<f64>>,
}

/// The barrier subproblem in real generator coordinates. Exposed so the
/// derivatives can be checked against finite differences.
pub struct BarrierProblem {
    dim: usize,
    ruler: Ruler,
    rhat: CMatrix,
    rhat_inv: CMatrix,
    shift: f64,
    full: Vec<Basis>,
    restricted: Vec<Basis>,
}

impl BarrierProblem {
    /// `rhat` must be positive definite; `shift` is the lower bound `c`.
    pub fn new(rhat: &CMatrix, ruler: &Ruler, shift: f64) -> Result<Self> {
        check_square(rhat, ruler.len())?;
        let rhat_inv = linalg::hpd_inverse(rhat).ok_or(Error::SingularRhat)?;
        Ok(Self {
            dim: ruler.dim(),
            ruler: ruler.clone(),
            rhat: rhat.clone(),
            rhat_inv,
            shift,
            full: full_basis(ruler.dim()),
            restricted: ruler_basis(ruler),
        })
    }

    /// Number of real parameters, `2d - 1`.
    pub fn num_params(&self) -> usize {
        2 * self.dim - 1
    }

    pub fn generators(&self, x: &[f64]) -> Vec<Complex64> {
        let mut g = vec![Complex64::new(x[0], 0.0)];
        for s in 1..self.dim {
            g.push(Complex64::new(x[2 * s - 1], x[2 * s]));
        }
        g
    }

    pub fn params(&self, u: &[Complex64]) -> Vec<f64> {
        let mut x = vec![u[0].re];
        for g in &u[1..] {
            x.push(g.re);
            x.push(g.im);
        }
        x
    }

    /// Whether `T(x) - cI` and `T(x)_Ω` are both positive definite.
    pub fn is_feasible(&self, x: &[f64]) -> bool {
        self.factor(x).is_some()
    }

    fn factor(&self, x: &[f64]) -> Option<(CMatrix, f64, CMatrix, f64)> {
        let g = self.generators(x);
        let mut s = HermitianToeplitz::from_generators(g.clone()).ok()?.to_dense();
        for j in 0..self.dim {
            s[(j, j)].re -= self.shift;
        }
        let cs = linalg::cholesky(&s)?;
        let logdet_s = linalg::hpd_logdet(&cs);
        let r = restrict_generators(&g, &self.ruler);
        let cr = linalg::cholesky(&r)?;
        let logdet_r = linalg::hpd_logdet(&cr);
        Some((cs.inverse(), logdet_s, cr.inverse(), logdet_r))
    }

    /// Two-trace objective (no barrier); `None` outside the domain.
    pub fn objective(&self, x: &[f64]) -> Option<f64> {
        let g = self.generators(x);
        let r = restrict_generators(&g, &self.ruler);
        let r_inv = linalg::hpd_inverse(&r)?;
        Some(linalg::trace_product_re(&self.rhat_inv, &r) + linalg::trace_product_re(&r_inv, &self.rhat))
    }

    /// Barrier value only; `None` outside the domain.
    pub fn value(&self, x: &[f64], mu: f64) -> Option<f64> {
        let (_, logdet_s, r_inv, logdet_r) = self.factor(x)?;
        let r = restrict_generators(&self.generators(x), &self.ruler);
        let f = linalg::trace_product_re(&self.rhat_inv, &r) + linalg::trace_product_re(&r_inv, &self.rhat);
        Some(f - mu * (logdet_s + logdet_r))
    }

    /// Value, gradient and optionally Hessian of the barrier objective.
    pub fn evaluate(&self, x: &[f64], mu: f64, with_hessian: bool) -> Option<BarrierEval> {
        let (s_inv, logdet_s, r_inv, logdet_r) = self.factor(x)?;
        let r = restrict_generators(&self.generators(x), &self.ruler);
        let objective =
            linalg::trace_product_re(&self.rhat_inv, &r) + linalg::trace_product_re(&r_inv, &self.rhat);
        let value = objective - mu * (logdet_s + logdet_r);

        let n = &r_inv * &self.rhat * &r_inv;
        let g_ruler = &self.rhat_inv - &n - r_inv.scale(mu);
        let g_full = s_inv.scale(-mu);
        let gradient: Vec<f64> = (0..self.num_params())
            .map(|p| trace_with_basis(&g_ruler, &self.restricted[p]) + trace_with_basis(&g_full, &self.full[p]))
            .collect();

        let hessian = with_hessian.then(|| {
            let np = self.num_params();
            let mut h = DMatrix::<f64>::zeros(np, np);
            for q in 0..np {
                let w = &r_inv * basis_times(&self.restricted[q], &n);
                let v = &r_inv * basis_times(&self.restricted[q], &r_inv);
                let u = &s_inv * basis_times(&self.full[q], &s_inv);
                for p in 0..=q {
                    let val = 2.0 * trace_with_basis(&w, &self.restricted[p])
                        + mu * trace_with_basis(&v, &self.restricted[p])
                        + mu * trace_with_basis(&u, &self.full[p]);
                    h[(p, q)] = val;
                    h[(q, p)] = val;
                }
            }
            h
        });
        Some(BarrierEval {
            value,
            objective,
            gradient,
            hessian,
        })
    }
}

fn newton_direction(h: &DMatrix<f64>, g: &[f64]) -> Option<Vec<f64>> {
    let n = g.len();
    let rhs = nalgebra::DVector::from_iterator(n, g.iter().map(|v| -v));
    let scale = (0..n).fold(0.0_f64, |m, i| m.max(h[(i, i)].abs())).max(f64::MIN_POSITIVE);
    let mut ridge = 0.0;
    for _ in 0..12 {
        let mut hr = h.clone();
        for i in 0..n {
            hr[(i, i)] += ridge;
        }
        if let Some(ch) = nalgebra::linalg::Cholesky::new(hr) {
            let dx = ch.solve(&rhs);
            if dx.iter().all(|v| v.is_finite()) {
                return Some(dx.iter().copied().collect());
            }
        }
        ridge = if ridge == 0.0 { 1e-14 * scale } else { ridge * 100.0 };
    }
    None
}

/// Result of centering at one barrier weight.
struct Centering {
    steps: usize,
    decrement: f64,
    objective: f64,
}

fn center(problem: &BarrierProblem, x: &mut Vec<f64>, mu: f64, max_inner: usize) -> Centering {
    const ARMIJO: f64 = 0.25;
    const DECREMENT_TOL: f64 = 1e-18;
    let mut steps = 0;
    let mut decrement = f64::INFINITY;
    let mut objective = problem.objective(x).unwrap_or(f64::NAN);
    while steps < max_inner {
        let Some(eval) = problem.evaluate(x, mu, true) else {
            break;
        };
        objective = eval.objective;
        let h = eval.hessian.as_ref().expect("hessian requested");
        let Some(dx) = newton_direction(h, &eval.gradient) else {
            break;
        };
        let slope: f64 = eval.gradient.iter().zip(&dx).map(|(g, d)| g * d).sum();
        let lambda_sq = -slope;
        decrement = lambda_sq.max(0.0).sqrt();
        if !(lambda_sq / 2.0 > DECREMENT_TOL) {
            break;
        }
        let mut t = 1.0;
        let mut accepted = None;
        for _ in 0..60 {
            let trial: Vec<f64> = x.iter().zip(&dx).map(|(a, b)| a + t * b).collect();
            if let Some(v) = problem.value(&trial, mu) {
                if v <= eval.value + ARMIJO * t * slope {
                    accepted = Some(trial);
                    break;
                }
            }
            t *= 0.5;
        }
        steps += 1;
        match accepted {
            Some(trial) => *x = trial,
            // no progress possible at working precision
            None => break,
        }
    }
    if let Some(f) = problem.objective(x) {
        objective = f;
    }
    Centering {
        steps,
        decrement,
        objective,
    }
}

fn is_toeplitz(rhat: &CMatrix, ruler: &Ruler) -> Result<Option<Vec<Complex64>>> {
    let g = toeplitz_adjoint_project(rhat, ruler)?;
    let t = restrict_generators(&g, ruler);
    let scale = rhat.norm();
    if (rhat - t).norm() <= 1e-12 * scale.max(f64::MIN_POSITIVE) {
        Ok(Some(g))
    } else {
        Ok(None)
    }
}

/// Q-SPA estimate from a quantized sample covariance `rhat` on `ruler`,
/// computed from `n` samples quantized with `spec`.
pub fn qspa_solve(
    rhat: &CMatrix,
    n: usize,
    ruler: &Ruler,
    spec: &QuantizationSpec,
    opts: &QspaOptions,
) -> Result<QspaSolution> {
    opts.validate()?;
    let m = ruler.len();
    check_square(rhat, m)?;
    let bias = spec.bias();

    let epsilon = match opts.epsilon_reg {
        Regularization::Auto => auto_regularization(rhat, n)?,
        Regularization::Fixed(e) => e,
    };
    let rhat_reg = linalg::hermitian_part(&regularize_sample_cov(rhat, epsilon));
    if linalg::cholesky(&rhat_reg).is_none() {
        return Err(Error::SingularRhat);
    }
    let tau = linalg::trace_re(&rhat_reg) / m as f64;

    if bias == 0.0 && ruler.is_full() {
        if let Some(g) = is_toeplitz(&rhat_reg, ruler)? {
            let t = HermitianToeplitz::from_generators(g.clone())?;
            return Ok(QspaSolution {
                objective: 2.0 * m as f64,
                u: g,
                kkt_residual: 0.0,
                iterations: 0,
                outer_iterations: 0,
                converged: true,
                epsilon_reg: epsilon,
                t_breve: t,
                trace: Vec::new(),
            });
        }
    }

    // Work with R̂ / τ; the objective is invariant under joint scaling.
    let rn = rhat_reg.unscale(tau);
    let shift = bias / tau;
    let problem = BarrierProblem::new(&rn, ruler, shift)?;

    let mut start = toeplitz_adjoint_project(&rn, ruler)?;
    let lmin = HermitianToeplitz::from_generators(start.clone())?.min_eigenvalue();
    // interior margin in units of τ
    let margin = 1e-3;
    if lmin < shift + margin {
        start[0].re += shift + margin - lmin;
    }
    let mut x = problem.params(&start);
    if !problem.is_feasible(&x) {
        // eigenvalue roundoff; push further into the interior
        x[0] += 1.0;
        if !problem.is_feasible(&x) {
            return Err(Error::InfeasibleU);
        }
    }

    let np = problem.num_params() as f64;
    let mut mu = opts.barrier_mu0;
    let mut trace = Vec::new();
    let mut iterations = 0;
    let mut converged = false;
    let mut last = Centering {
        steps: 0,
        decrement: f64::INFINITY,
        objective: f64::NAN,
    };
    for outer in 0..opts.max_outer {
        last = center(&problem, &mut x, mu, opts.max_inner);
        iterations += last.steps;
        trace.push(TraceRow {
            iteration: outer + 1,
            mu,
            objective: last.objective,
            kkt_residual: last.decrement,
        });
        if np * mu < opts.newton_tol && last.decrement < 1e-6 * (1.0 + last.objective.abs()) {
            converged = true;
            break;
        }
        mu *= opts.barrier_shrink;
    }

    let mut u = problem.generators(&x);
    for g in u.iter_mut() {
        *g *= tau;
    }
    u[0].im = 0.0;
    let t_breve = HermitianToeplitz::from_generators(u.clone())?.shift_diagonal(-bias);
    Ok(QspaSolution {
        u,
        objective: last.objective,
        kkt_residual: last.decrement,
        iterations,
        outer_iterations: trace.len(),
        converged,
        epsilon_reg: epsilon,
        t_breve,
        trace,
    })
}

//! Running one estimator on one batch.

use std::io::Write;

use qtcov_core::estimators::{batch_spec, qscm, qtscm, quantized_sample_covariance, Estimate, EstimatorKind};
use qtcov_core::qspa::{qspa_solve, QspaSolution};
use qtcov_core::{EstimationReport, HermitianToeplitz, QspaOptions, Ruler, SampleBatch};
use serde::Serialize;

use crate::error::Result;

/// Whether `kind` can run on batches observed through `ruler`.
pub fn applicable(kind: EstimatorKind, ruler: &Ruler) -> bool {
    kind != EstimatorKind::Qscm || ruler.is_full()
}

/// The estimate and, for Q-SPA, the solver output.
pub fn estimate_with_solution(
    batch: &SampleBatch,
    kind: EstimatorKind,
    opts: &QspaOptions,
) -> Result<(Estimate, Option<QspaSolution>)> {
    Ok(match kind {
        EstimatorKind::Qtscm | EstimatorKind::Tscm2k => (Estimate::Toeplitz(qtscm(batch)?), None),
        EstimatorKind::Qscm => (Estimate::Dense(qscm(batch)?), None),
        EstimatorKind::Qspa => {
            let rhat = quantized_sample_covariance(batch)?;
            let sol = qspa_solve(&rhat, batch.n(), batch.ruler(), &batch_spec(batch), opts)?;
            (Estimate::Toeplitz(sol.t_breve.clone()), Some(sol))
        }
    })
}

pub fn estimate(batch: &SampleBatch, kind: EstimatorKind, opts: &QspaOptions) -> Result<Estimate> {
    Ok(estimate_with_solution(batch, kind, opts)?.0)
}

/// Estimation report, with the relative error filled in when `truth` is known.
pub fn report(
    batch: &SampleBatch,
    kind: EstimatorKind,
    opts: &QspaOptions,
    truth: Option<&HermitianToeplitz>,
) -> Result<(EstimationReport, Option<QspaSolution>)> {
    let (est, sol) = estimate_with_solution(batch, kind, opts)?;
    let mut rep = EstimationReport::new(est, kind, batch);
    if let Some(t) = truth {
        rep = rep.with_truth(t)?;
    }
    Ok((rep, sol))
}

/// CSV form of an [`EstimationReport`].
#[derive(Debug, Clone, PartialEq, Serialize, serde::Deserialize)]
pub struct ReportRow {
    pub estimator: String,
    pub d: usize,
    pub n: usize,
    pub ruler: String,
    pub delta_r: f64,
    pub delta_i: f64,
    pub k: Option<u32>,
    pub seed: u64,
    pub rel_error_spectral: Option<f64>,
}

impl ReportRow {
    pub fn new(rep: &EstimationReport, seed: u64) -> Self {
        Self {
            estimator: rep.estimator.name().to_string(),
            d: rep.ruler.dim(),
            n: rep.n,
            ruler: rep.ruler.to_list_string(),
            delta_r: rep.spec.delta_r(),
            delta_i: rep.spec.delta_i(),
            k: rep.spec.bits(),
            seed,
            rel_error_spectral: rep.rel_error_spectral,
        }
    }
}

pub fn write_reports<W: Write>(w: W, rows: &[ReportRow]) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    for r in rows {
        wr.serialize(r)?;
    }
    wr.flush()?;
    Ok(())
}

/// Per-iteration solver trace as CSV.
pub fn write_qspa_trace<W: Write>(w: W, sol: &QspaSolution) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record(["iteration", "mu", "objective", "kkt_residual"])?;
    for t in &sol.trace {
        wr.write_record([
            t.iteration.to_string(),
            t.mu.to_string(),
            t.objective.to_string(),
            t.kkt_residual.to_string(),
        ])?;
    }
    wr.flush()?;
    Ok(())
}

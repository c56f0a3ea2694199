//! Monte Carlo orchestration.
//!
//! Trial `t` of every grid point uses seed `base ^ t` for the covariance,
//! the samples and the dither, so grid points share random numbers and
//! differences between them are not blurred by independent noise. Trials
//! run on the rayon pool; results are collected in trial order before any
//! reduction, so the table does not depend on the number of workers.

use qtcov_core::doa::{estimate_frequencies_dense, frequency_mse};
use qtcov_core::estimators::EstimatorKind;
use qtcov_core::quantizer::{quantize_batch, select_level_datadriven};
use qtcov_core::sampling::{random_toeplitz_covariance, GaussianSampler};
use qtcov_core::{HermitianToeplitz, QuantizationSpec};
use rayon::prelude::*;

use crate::config::{ExperimentConfig, LevelSource, Noise, Quantization, Scene};
use crate::error::Result;
use crate::pipeline::{applicable, estimate};
use crate::rulers::{parse_ruler, NamedRuler};
use crate::table::{ResultTable, Row, Stat, METRIC_FREQ_MSE, METRIC_REL_ERROR};

/// One cell of the parameter sweep.
#[derive(Debug, Clone)]
pub struct GridPoint {
    pub d: usize,
    pub ruler: NamedRuler,
    pub noise: Option<Noise>,
    pub quant: Quantization,
    pub n: usize,
}

impl GridPoint {
    fn describe(&self) -> String {
        let q = match self.quant {
            Quantization::Levels { delta_r, delta_i } => format!("delta=({delta_r},{delta_i})"),
            Quantization::Bits { bits, .. } => format!("k={bits}"),
        };
        format!("d={} n={} ruler={} {q}", self.d, self.n, self.ruler.label)
    }
}

/// Grid points in output order: d, ruler, noise, quantization, n.
pub fn grid(cfg: &ExperimentConfig) -> Result<Vec<GridPoint>> {
    let noises: Vec<Option<Noise>> = match &cfg.scene {
        Some(s) => s.noise.iter().copied().map(Some).collect(),
        None => vec![None],
    };
    let mut out = Vec::new();
    for &d in &cfg.dims {
        for spec in &cfg.rulers {
            let ruler = parse_ruler(spec, d)?;
            for &noise in &noises {
                for &quant in &cfg.quantizations {
                    for &n in &cfg.ns {
                        out.push(GridPoint {
                            d,
                            ruler: ruler.clone(),
                            noise,
                            quant,
                            n,
                        });
                    }
                }
            }
        }
    }
    Ok(out)
}

/// Metric values of one trial, one per estimator, plus the level used.
#[derive(Debug, Clone)]
pub struct TrialOutcome {
    pub metrics: Vec<f64>,
    pub level: (f64, f64),
}

fn truth_for(scene: Option<(&Scene, Noise)>, d: usize, seed: u64) -> Result<HermitianToeplitz> {
    match scene {
        Some((s, noise)) => Ok(s.build(noise, d)?.covariance()?),
        None => Ok(random_toeplitz_covariance(d, seed)),
    }
}

/// Runs every applicable estimator on one trial of `point`.
pub fn run_trial(
    cfg: &ExperimentConfig,
    point: &GridPoint,
    estimators: &[EstimatorKind],
    seed: u64,
) -> Result<TrialOutcome> {
    let scene = cfg.scene.as_ref().zip(point.noise);
    let truth = truth_for(scene, point.d, seed)?;
    let ruler = &point.ruler.ruler;
    let raw = GaussianSampler::new(&truth, ruler)?.sample(point.n, seed)?;
    let spec = match point.quant {
        Quantization::Levels { delta_r, delta_i } => QuantizationSpec::infinite(delta_r, delta_i)?,
        Quantization::Bits { bits, level } => {
            let delta = match level {
                LevelSource::Fixed(x) => x,
                LevelSource::Bound(rule) => rule.level(truth.gamma0(), point.n, ruler.len(), bits)?,
                LevelSource::DataDriven => select_level_datadriven(&raw)?,
            };
            QuantizationSpec::finite(delta, bits)?
        }
    };
    let batch = quantize_batch(&raw, &spec, seed)?;
    let mut metrics = Vec::with_capacity(estimators.len());
    for &kind in estimators {
        let est = estimate(&batch, kind, &cfg.qspa)?;
        let m = match scene {
            Some((s, _)) => {
                let f = estimate_frequencies_dense(&est.to_dense(), s.freqs.len(), cfg.music_grid)?;
                frequency_mse(&f.freqs, &s.freqs)?
            }
            None => est.relative_error(&truth)?,
        };
        metrics.push(m);
    }
    Ok(TrialOutcome {
        metrics,
        level: (spec.delta_r(), spec.delta_i()),
    })
}

fn mean_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// All trials of one grid point, reduced to mean and standard-error rows.
pub fn run_point(cfg: &ExperimentConfig, point: &GridPoint) -> Vec<Row> {
    let estimators: Vec<EstimatorKind> = cfg
        .estimators
        .iter()
        .copied()
        .filter(|&k| applicable(k, &point.ruler.ruler))
        .collect();
    if estimators.is_empty() {
        return Vec::new();
    }
    let outcomes: Vec<Result<TrialOutcome>> = (0..cfg.trials as u64)
        .into_par_iter()
        .map(|t| run_trial(cfg, point, &estimators, cfg.seed ^ t))
        .collect();

    let failure = outcomes.iter().find_map(|o| o.as_ref().err());
    let (level, note) = match failure {
        Some(e) => (nominal_level(point.quant), format!("{}: {e}", point.describe())),
        None => {
            let ok: Vec<&TrialOutcome> = outcomes.iter().filter_map(|o| o.as_ref().ok()).collect();
            let n = ok.len() as f64;
            let lr = ok.iter().map(|o| o.level.0).sum::<f64>() / n;
            let li = ok.iter().map(|o| o.level.1).sum::<f64>() / n;
            (level_or_exact(point.quant, (lr, li)), String::new())
        }
    };

    let metric = if cfg.scene.is_some() {
        METRIC_FREQ_MSE
    } else {
        METRIC_REL_ERROR
    };
    let mut rows = Vec::with_capacity(2 * estimators.len());
    for (i, kind) in estimators.iter().enumerate() {
        let (mean, se) = if failure.is_some() {
            (f64::NAN, f64::NAN)
        } else {
            let vals: Vec<f64> = outcomes.iter().map(|o| o.as_ref().unwrap().metrics[i]).collect();
            mean_se(&vals)
        };
        let k = match point.quant {
            Quantization::Bits { bits, .. } => Some(bits),
            Quantization::Levels { .. } => None,
        };
        let snr_db = point.noise.and_then(|nz| match nz {
            Noise::SnrDb(s) => Some(s),
            Noise::Variance(_) => None,
        });
        let base = Row {
            experiment: cfg.experiment.as_str().to_string(),
            estimator: kind.name().to_string(),
            d: point.d,
            n: point.n,
            delta_r: level.0,
            delta_i: level.1,
            k,
            ruler: point.ruler.label.clone(),
            snr_db,
            trials: cfg.trials,
            stat: Stat::Mean,
            metric: metric.to_string(),
            value: mean,
            note: note.clone(),
        };
        rows.push(base.clone());
        rows.push(Row {
            stat: Stat::Se,
            value: se,
            ..base
        });
    }
    rows
}

fn nominal_level(q: Quantization) -> (f64, f64) {
    match q {
        Quantization::Levels { delta_r, delta_i } => (delta_r, delta_i),
        Quantization::Bits {
            level: LevelSource::Fixed(x),
            ..
        } => (x, x),
        Quantization::Bits { .. } => (f64::NAN, f64::NAN),
    }
}

/// Configured levels verbatim; averaged levels for trial-dependent rules.
fn level_or_exact(q: Quantization, mean: (f64, f64)) -> (f64, f64) {
    let nominal = nominal_level(q);
    if nominal.0.is_nan() {
        mean
    } else {
        nominal
    }
}

/// Runs the whole sweep. Grid points run in order; trials within a point
/// run in parallel.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ResultTable> {
    run_experiment_with_progress(cfg, |_, _, _| {})
}

/// As [`run_experiment`], calling `progress(done, total, point)` after each
/// grid point.
pub fn run_experiment_with_progress(
    cfg: &ExperimentConfig,
    mut progress: impl FnMut(usize, usize, &GridPoint),
) -> Result<ResultTable> {
    let points = grid(cfg)?;
    let mut table = ResultTable::new();
    for (i, p) in points.iter().enumerate() {
        table.extend(run_point(cfg, p));
        progress(i + 1, points.len(), p);
    }
    Ok(table)
}

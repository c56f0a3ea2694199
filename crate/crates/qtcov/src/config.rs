//! Experiment configuration files (TOML, `schema = 1`).
//!
//! ```toml
//! schema = 1
//! experiment = "exp2"          # exp1..exp5 or custom
//! d = 16                       # or a list: d = [8, 16, 32]
//! rulers = ["A", "B", "half:alpha=0.5"]
//! delta = [1.0, 5.0]           # equal real/imaginary levels
//! # delta_grid = [0, 1, 2]     # every (Δr, Δi) pair instead
//! # bits = [2, 3, 4]           # finite-bit quantization
//! # level_rule = { kind = "bound", c_bit = 1.0, delta_prime = 2.302585 }
//! n = [100, 1000, 10000]
//! trials = 100
//! seed = 1
//! estimators = ["qtscm", "qscm", "qspa"]
//! output_dir = "results"
//!
//! [scene]                      # covariance for DOA experiments
//! freqs = [0.08, 0.21, 0.37, 0.68, 0.81]
//! powers = [1, 1, 1, 1, 1]
//! snr_db = 10                  # or noise_var = 0.1
//!
//! [qspa]
//! barrier_mu0 = 1.0
//! ```
//!
//! Keys left out take the defaults of the named experiment.

use std::path::{Path, PathBuf};

use qtcov_core::estimators::EstimatorKind;
use qtcov_core::qspa::Regularization;
use qtcov_core::{DoaScene, LevelRule, QspaOptions};
use serde::Deserialize;

use crate::error::{Error, Result};
use crate::rulers::parse_ruler;

pub const SCHEMA: u32 = 1;

/// Problem-size caps selected on the command line.
#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Profile {
    /// Sample sizes up to 10^4.
    Ci,
    /// Sample sizes up to 10^6.
    Full,
}

impl Profile {
    pub fn max_n(self) -> usize {
        match self {
            Self::Ci => 10_000,
            Self::Full => 1_000_000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExperimentId {
    /// Error over a grid of real and imaginary levels.
    Exp1,
    /// Error against n for rulers of different coverage.
    Exp2,
    /// Error against n for every estimator.
    Exp3,
    /// Finite-bit sweep over k.
    Exp4,
    /// Frequency estimation from quantized array snapshots.
    Exp5,
    Custom,
}

impl ExperimentId {
    pub fn parse(s: &str) -> Result<Self> {
        Ok(match s {
            "exp1" => Self::Exp1,
            "exp2" => Self::Exp2,
            "exp3" => Self::Exp3,
            "exp4" => Self::Exp4,
            "exp5" => Self::Exp5,
            "custom" => Self::Custom,
            _ => return Err(Error::config(format!("unknown experiment `{s}`"))),
        })
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Exp1 => "exp1",
            Self::Exp2 => "exp2",
            Self::Exp3 => "exp3",
            Self::Exp4 => "exp4",
            Self::Exp5 => "exp5",
            Self::Custom => "custom",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum OneOrMany<T> {
    One(T),
    Many(Vec<T>),
}

impl<T: Clone> OneOrMany<T> {
    pub fn to_vec(&self) -> Vec<T> {
        match self {
            Self::One(x) => vec![x.clone()],
            Self::Many(v) => v.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum LevelRuleConfig {
    /// Use the `delta` values as given.
    Fixed,
    /// `Δ = C_bit 2^{2-k} sqrt(γ0 (ln(n|Ω|) + δ'))` with the true `γ0`.
    Bound {
        c_bit: Option<f64>,
        delta_prime: Option<f64>,
    },
    /// Largest modulus of the raw batch.
    Datadriven,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneConfig {
    pub freqs: Vec<f64>,
    pub powers: Option<Vec<f64>>,
    pub noise_var: Option<f64>,
    pub snr_db: Option<OneOrMany<f64>>,
}

impl SceneConfig {
    /// Powers default to 1 and noise to zero.
    pub fn resolve(self) -> Result<Scene> {
        let k = self.freqs.len();
        let powers = self.powers.unwrap_or_else(|| vec![1.0; k]);
        let noise = match (self.noise_var, self.snr_db) {
            (Some(v), None) => vec![Noise::Variance(v)],
            (None, Some(snr)) => snr.to_vec().into_iter().map(Noise::SnrDb).collect(),
            (None, None) => vec![Noise::Variance(0.0)],
            (Some(_), Some(_)) => return Err(Error::config("give either noise_var or snr_db")),
        };
        Ok(Scene {
            freqs: self.freqs,
            powers,
            noise,
        })
    }
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QspaConfig {
    /// Fixed diagonal loading; omitted means automatic.
    pub epsilon_reg: Option<f64>,
    pub barrier_mu0: Option<f64>,
    pub barrier_shrink: Option<f64>,
    pub newton_tol: Option<f64>,
    pub max_outer: Option<usize>,
    pub max_inner: Option<usize>,
}

impl QspaConfig {
    pub fn options(&self) -> QspaOptions {
        let d = QspaOptions::default();
        QspaOptions {
            epsilon_reg: self.epsilon_reg.map_or(Regularization::Auto, Regularization::Fixed),
            barrier_mu0: self.barrier_mu0.unwrap_or(d.barrier_mu0),
            barrier_shrink: self.barrier_shrink.unwrap_or(d.barrier_shrink),
            newton_tol: self.newton_tol.unwrap_or(d.newton_tol),
            max_outer: self.max_outer.unwrap_or(d.max_outer),
            max_inner: self.max_inner.unwrap_or(d.max_inner),
        }
    }
}

/// The file as written; every key but `schema` is optional.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub schema: u32,
    pub experiment: Option<String>,
    pub d: Option<OneOrMany<usize>>,
    pub rulers: Option<Vec<String>>,
    pub delta: Option<OneOrMany<f64>>,
    pub delta_grid: Option<Vec<f64>>,
    pub bits: Option<OneOrMany<u32>>,
    pub level_rule: Option<LevelRuleConfig>,
    pub include_unquantized: Option<bool>,
    pub n: Option<OneOrMany<usize>>,
    pub trials: Option<usize>,
    pub seed: Option<u64>,
    pub estimators: Option<Vec<String>>,
    pub scene: Option<SceneConfig>,
    pub music_grid: Option<usize>,
    pub qspa: Option<QspaConfig>,
    pub output_dir: Option<String>,
}

/// How the level of a finite-bit quantizer is chosen.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LevelSource {
    Fixed(f64),
    Bound(LevelRule),
    DataDriven,
}

/// One quantization setting of the sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Quantization {
    /// Infinite-level quantizer; zero levels mean no quantization.
    Levels { delta_r: f64, delta_i: f64 },
    Bits { bits: u32, level: LevelSource },
}

/// Noise setting of a DOA scene.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Noise {
    Variance(f64),
    SnrDb(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scene {
    pub freqs: Vec<f64>,
    pub powers: Vec<f64>,
    pub noise: Vec<Noise>,
}

impl Scene {
    pub fn build(&self, noise: Noise, dim: usize) -> Result<DoaScene> {
        let var = match noise {
            Noise::Variance(v) => v,
            Noise::SnrDb(s) => DoaScene::noise_for_snr(&self.powers, s),
        };
        Ok(DoaScene::new(self.freqs.clone(), self.powers.clone(), var, dim)?)
    }
}

/// A validated configuration with every default filled in.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub experiment: ExperimentId,
    pub dims: Vec<usize>,
    pub rulers: Vec<String>,
    pub quantizations: Vec<Quantization>,
    pub ns: Vec<usize>,
    pub trials: usize,
    pub seed: u64,
    pub estimators: Vec<EstimatorKind>,
    pub scene: Option<Scene>,
    pub music_grid: usize,
    pub qspa: QspaOptions,
    pub output_dir: Option<PathBuf>,
}

pub const DOA_FREQS: [f64; 5] = [0.08, 0.21, 0.37, 0.68, 0.81];

fn strings(v: &[&str]) -> Option<Vec<String>> {
    Some(v.iter().map(|s| s.to_string()).collect())
}

fn sweep_n() -> Option<OneOrMany<usize>> {
    Some(OneOrMany::Many(vec![100, 1_000, 10_000, 100_000, 1_000_000]))
}

/// Defaults for a named experiment.
pub fn preset(id: ExperimentId) -> ConfigFile {
    let base = ConfigFile {
        schema: SCHEMA,
        experiment: Some(id.as_str().into()),
        d: Some(OneOrMany::One(16)),
        rulers: strings(&["full"]),
        trials: Some(100),
        seed: Some(1),
        estimators: strings(&["qtscm"]),
        ..ConfigFile::default()
    };
    match id {
        ExperimentId::Exp1 => ConfigFile {
            delta_grid: Some(vec![0.0, 1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0]),
            n: Some(OneOrMany::One(500)),
            ..base
        },
        ExperimentId::Exp2 => ConfigFile {
            rulers: strings(&["A", "B", "half:alpha=0.5"]),
            delta: Some(OneOrMany::Many(vec![1.0, 5.0])),
            n: sweep_n(),
            ..base
        },
        ExperimentId::Exp3 => ConfigFile {
            rulers: strings(&["full", "half:alpha=0.5"]),
            delta: Some(OneOrMany::One(5.0)),
            n: sweep_n(),
            estimators: strings(&["qtscm", "qscm", "qspa"]),
            ..base
        },
        ExperimentId::Exp4 => ConfigFile {
            rulers: strings(&["full", "half:alpha=0.5"]),
            bits: Some(OneOrMany::Many(vec![2, 3, 4, 5, 6])),
            level_rule: Some(LevelRuleConfig::Bound {
                c_bit: None,
                delta_prime: None,
            }),
            include_unquantized: Some(true),
            n: Some(OneOrMany::One(500)),
            estimators: strings(&["2k-tscm", "qspa"]),
            ..base
        },
        ExperimentId::Exp5 => ConfigFile {
            rulers: strings(&["full", "half:alpha=0.5"]),
            bits: Some(OneOrMany::One(2)),
            level_rule: Some(LevelRuleConfig::Bound {
                c_bit: Some(0.25),
                delta_prime: None,
            }),
            n: Some(OneOrMany::Many(vec![100, 1_000, 10_000, 100_000])),
            estimators: strings(&["qtscm", "qscm", "qspa"]),
            scene: Some(SceneConfig {
                freqs: DOA_FREQS.to_vec(),
                powers: None,
                noise_var: None,
                snr_db: Some(OneOrMany::One(10.0)),
            }),
            ..base
        },
        ExperimentId::Custom => ConfigFile {
            delta: Some(OneOrMany::One(1.0)),
            ..base
        },
    }
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self> {
        let file: Self = toml::from_str(text)?;
        if file.schema != SCHEMA {
            return Err(Error::config(format!(
                "unsupported schema {} (expected {SCHEMA})",
                file.schema
            )));
        }
        Ok(file)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    /// Fills missing keys from the experiment's preset.
    fn merged(self) -> Result<(ExperimentId, Self)> {
        let id = ExperimentId::parse(self.experiment.as_deref().unwrap_or("custom"))?;
        let p = preset(id);
        // an explicit delta or delta_grid replaces both preset keys
        let (delta, delta_grid) = if self.delta.is_some() || self.delta_grid.is_some() {
            (self.delta, self.delta_grid)
        } else {
            (p.delta, p.delta_grid)
        };
        let merged = Self {
            schema: self.schema,
            experiment: Some(id.as_str().into()),
            d: self.d.or(p.d),
            rulers: self.rulers.or(p.rulers),
            delta,
            delta_grid,
            bits: self.bits.or(p.bits),
            level_rule: self.level_rule.or(p.level_rule),
            include_unquantized: self.include_unquantized.or(p.include_unquantized),
            n: self.n.or(p.n),
            trials: self.trials.or(p.trials),
            seed: self.seed.or(p.seed),
            estimators: self.estimators.or(p.estimators),
            scene: self.scene.or(p.scene),
            music_grid: self.music_grid.or(p.music_grid),
            qspa: self.qspa.or(p.qspa),
            output_dir: self.output_dir.or(p.output_dir),
        };
        Ok((id, merged))
    }

    pub fn resolve(self, profile: Profile) -> Result<ExperimentConfig> {
        let (experiment, f) = self.merged()?;
        let dims = f.d.map(|d| d.to_vec()).unwrap_or_default();
        if dims.is_empty() || dims.contains(&0) {
            return Err(Error::config("d must list positive dimensions"));
        }
        let rulers = f.rulers.unwrap_or_default();
        if rulers.is_empty() {
            return Err(Error::config("at least one ruler is required"));
        }
        for &d in &dims {
            for r in &rulers {
                parse_ruler(r, d)?;
            }
        }

        let cap = profile.max_n();
        let all_n = f.n.map(|n| n.to_vec()).unwrap_or_default();
        if all_n.contains(&0) {
            return Err(Error::config("sample sizes must be positive"));
        }
        let ns: Vec<usize> = all_n.iter().copied().filter(|&n| n <= cap).collect();
        if ns.is_empty() {
            return Err(Error::config(format!("no sample size within the profile cap {cap}")));
        }

        let trials = f.trials.unwrap_or(100);
        if trials == 0 {
            return Err(Error::config("trials must be at least 1"));
        }

        let deltas: Vec<(f64, f64)> = match (&f.delta_grid, &f.delta) {
            (Some(grid), _) => grid.iter().flat_map(|&r| grid.iter().map(move |&i| (r, i))).collect(),
            (None, Some(d)) => d.to_vec().into_iter().map(|x| (x, x)).collect(),
            (None, None) => Vec::new(),
        };
        if deltas.iter().any(|&(r, i)| !(r >= 0.0 && i >= 0.0 && r.is_finite() && i.is_finite())) {
            return Err(Error::config("quantization levels must be finite and nonnegative"));
        }

        let mut quantizations = Vec::new();
        match &f.bits {
            None => {
                if deltas.is_empty() {
                    return Err(Error::config("delta or delta_grid is required"));
                }
                quantizations.extend(deltas.iter().map(|&(delta_r, delta_i)| Quantization::Levels { delta_r, delta_i }));
            }
            Some(bits) => {
                let rule = f.level_rule.clone().unwrap_or(LevelRuleConfig::Fixed);
                for k in bits.to_vec() {
                    if !(1..=30).contains(&k) {
                        return Err(Error::config(format!("bits = {k} outside 1..=30")));
                    }
                    match &rule {
                        LevelRuleConfig::Fixed => {
                            if deltas.is_empty() {
                                return Err(Error::config("fixed levels need delta"));
                            }
                            for &(r, i) in &deltas {
                                if r != i || r <= 0.0 {
                                    return Err(Error::config("finite-bit levels must be positive and equal"));
                                }
                                quantizations.push(Quantization::Bits {
                                    bits: k,
                                    level: LevelSource::Fixed(r),
                                });
                            }
                        }
                        LevelRuleConfig::Bound { c_bit, delta_prime } => {
                            let d = LevelRule::default();
                            let rule = LevelRule {
                                c_bit: c_bit.unwrap_or(d.c_bit),
                                delta_prime: delta_prime.unwrap_or(d.delta_prime),
                            };
                            if !(rule.c_bit > 0.0 && rule.delta_prime >= 0.0) {
                                return Err(Error::config("level rule needs c_bit > 0 and delta_prime >= 0"));
                            }
                            quantizations.push(Quantization::Bits {
                                bits: k,
                                level: LevelSource::Bound(rule),
                            });
                        }
                        LevelRuleConfig::Datadriven => quantizations.push(Quantization::Bits {
                            bits: k,
                            level: LevelSource::DataDriven,
                        }),
                    }
                }
            }
        }
        if f.include_unquantized.unwrap_or(false) {
            quantizations.push(Quantization::Levels {
                delta_r: 0.0,
                delta_i: 0.0,
            });
        }

        let estimators = f
            .estimators
            .unwrap_or_default()
            .iter()
            .map(|s| EstimatorKind::parse(s).ok_or_else(|| Error::config(format!("unknown estimator `{s}`"))))
            .collect::<Result<Vec<_>>>()?;
        if estimators.is_empty() {
            return Err(Error::config("at least one estimator is required"));
        }

        let scene = match f.scene {
            Some(s) => {
                let scene = s.resolve()?;
                for &d in &dims {
                    for &nz in &scene.noise {
                        scene.build(nz, d)?;
                    }
                }
                Some(scene)
            }
            None => None,
        };
        if experiment == ExperimentId::Exp5 && scene.is_none() {
            return Err(Error::config("exp5 needs a scene"));
        }

        let music_grid = f.music_grid.unwrap_or(qtcov_core::doa::DEFAULT_GRID);
        let qspa = f.qspa.unwrap_or_default().options();

        Ok(ExperimentConfig {
            experiment,
            dims,
            rulers,
            quantizations,
            ns,
            trials,
            seed: f.seed.unwrap_or(1),
            estimators,
            scene,
            music_grid,
            qspa,
            output_dir: f.output_dir.map(PathBuf::from),
        })
    }
}

impl ExperimentConfig {
    pub fn preset(id: ExperimentId, profile: Profile) -> Result<Self> {
        preset(id).resolve(profile)
    }

    pub fn load(path: &Path, profile: Profile) -> Result<Self> {
        ConfigFile::load(path)?.resolve(profile)
    }

    /// Frequency MSE for scene experiments, relative spectral error otherwise.
    pub fn metric(&self) -> &'static str {
        if self.scene.is_some() {
            crate::table::METRIC_FREQ_MSE
        } else {
            crate::table::METRIC_REL_ERROR
        }
    }
}

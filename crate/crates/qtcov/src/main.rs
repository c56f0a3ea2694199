use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use qtcov::batch_io::{read_batch, write_batch, BatchFile};
use qtcov::config::{ConfigFile, ExperimentConfig, ExperimentId, Noise, Profile, SceneConfig};
use qtcov::pipeline::{applicable, report, write_qspa_trace, write_reports, ReportRow};
use qtcov::rulers::parse_ruler;
use qtcov::runner::run_experiment_with_progress;
use qtcov::{emit_plot, Error, PlotKind, Result, OUT_DIR_ENV};
use qtcov_core::doa::{estimate_frequencies_dense, frequency_mse, DEFAULT_GRID};
use qtcov_core::quantizer::{quantize_batch, select_level_datadriven};
use qtcov_core::sampling::random_toeplitz_covariance;
use qtcov_core::{EstimatorKind, GaussianSampler, LevelRule, QspaOptions, QuantizationSpec};

#[derive(Parser)]
#[command(name = "qtcov", version, about = "Covariance estimation from dithered quantized samples")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Draw a batch of samples, optionally quantized, and write it to a file.
    Simulate(SimulateArgs),
    /// Run estimators on a batch file and write a CSV report.
    Estimate(EstimateArgs),
    /// Run a Monte Carlo sweep and write `<exp>.csv` and `<exp>.svg`.
    Experiment(ExperimentArgs),
    /// Estimate source frequencies from a batch with MUSIC.
    Doa(DoaArgs),
    /// Print a ruler's indices, size and coverage coefficient.
    Ruler(RulerArgs),
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(short, long)]
    d: usize,
    /// `full`, `alpha=<a>`, `A`, `B` or a comma-separated index list.
    #[arg(long, default_value = "full")]
    ruler: String,
    #[arg(short, long)]
    n: usize,
    /// Quantization level (real part, and imaginary unless --delta-i is given).
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long)]
    delta_i: Option<f64>,
    /// Bits per real component; the level comes from --delta or the bound rule.
    #[arg(long)]
    bits: Option<u32>,
    /// Use the largest raw modulus as the finite-bit level.
    #[arg(long, conflicts_with = "delta")]
    datadriven: bool,
    #[arg(long, default_value_t = LevelRule::default().c_bit)]
    c_bit: f64,
    /// TOML file with `freqs`, `powers` and `noise_var` or `snr_db`.
    #[arg(long)]
    scene: Option<PathBuf>,
    /// Write the unquantized samples.
    #[arg(long, conflicts_with_all = ["delta", "bits"])]
    raw: bool,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Output file; stdout when absent.
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct EstimateArgs {
    batch: PathBuf,
    /// Comma-separated: qtscm, 2k-tscm, qscm, qspa.
    #[arg(short, long, value_delimiter = ',', default_value = "qtscm")]
    estimators: Vec<String>,
    /// Write the Q-SPA iteration trace here.
    #[arg(long)]
    trace: Option<PathBuf>,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct ExperimentArgs {
    #[arg(long, conflicts_with = "preset", required_unless_present = "preset")]
    config: Option<PathBuf>,
    /// exp1 .. exp5
    #[arg(long)]
    preset: Option<String>,
    #[arg(long, value_enum, default_value = "ci")]
    profile: Profile,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long, env = OUT_DIR_ENV)]
    out_dir: Option<PathBuf>,
    #[arg(short, long)]
    quiet: bool,
}

#[derive(Args)]
struct DoaArgs {
    batch: PathBuf,
    #[arg(long)]
    scene: PathBuf,
    #[arg(short, long, default_value = "qtscm")]
    estimator: String,
    #[arg(long, default_value_t = DEFAULT_GRID)]
    grid: usize,
}

#[derive(Args)]
struct RulerArgs {
    spec: String,
    #[arg(short, long)]
    d: usize,
}

fn parse_estimator(s: &str) -> Result<EstimatorKind> {
    EstimatorKind::parse(s).ok_or_else(|| Error::config(format!("unknown estimator `{s}`")))
}

fn load_scene(path: &Path) -> Result<SceneConfig> {
    Ok(toml::from_str(&std::fs::read_to_string(path)?)?)
}

fn scene_noise(noise: &[Noise]) -> Result<Noise> {
    match noise {
        [one] => Ok(*one),
        _ => Err(Error::config("the scene must give a single noise setting")),
    }
}

fn output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn simulate(a: SimulateArgs) -> Result<()> {
    let ruler = parse_ruler(&a.ruler, a.d)?.ruler;
    let truth = match &a.scene {
        Some(p) => {
            let scene = load_scene(p)?.resolve()?;
            scene.build(scene_noise(&scene.noise)?, a.d)?.covariance()?
        }
        None => random_toeplitz_covariance(a.d, a.seed),
    };
    let raw = GaussianSampler::new(&truth, &ruler)?.sample(a.n, a.seed)?;
    let batch = if a.raw {
        raw
    } else {
        let spec = match a.bits {
            Some(bits) => {
                let delta = match a.delta {
                    Some(x) => x,
                    None if a.datadriven => select_level_datadriven(&raw)?,
                    None => LevelRule {
                        c_bit: a.c_bit,
                        ..LevelRule::default()
                    }
                    .level(truth.gamma0(), a.n, ruler.len(), bits)?,
                };
                QuantizationSpec::finite(delta, bits)?
            }
            None => {
                let dr = a
                    .delta
                    .ok_or_else(|| Error::config("give --delta, --bits or --raw"))?;
                QuantizationSpec::infinite(dr, a.delta_i.unwrap_or(dr))?
            }
        };
        quantize_batch(&raw, &spec, a.seed)?
    };
    let mut w = output(a.output.as_deref())?;
    write_batch(
        &mut w,
        &BatchFile {
            batch,
            truth: Some(truth),
        },
    )?;
    w.flush()?;
    Ok(())
}

fn estimate(a: EstimateArgs) -> Result<()> {
    let file = read_batch(BufReader::new(File::open(&a.batch)?))?;
    let opts = QspaOptions::default();
    let mut rows = Vec::new();
    for name in &a.estimators {
        let kind = parse_estimator(name)?;
        if !applicable(kind, file.batch.ruler()) {
            return Err(Error::config(format!("{} needs the full ruler", kind.name())));
        }
        let (rep, sol) = report(&file.batch, kind, &opts, file.truth.as_ref())?;
        if let (Some(path), Some(sol)) = (&a.trace, &sol) {
            write_qspa_trace(File::create(path)?, sol)?;
        }
        rows.push(ReportRow::new(&rep, file.batch.seed()));
    }
    write_reports(output(a.output.as_deref())?, &rows)
}

fn experiment(a: ExperimentArgs) -> Result<()> {
    let mut file = match (&a.config, &a.preset) {
        (Some(p), _) => ConfigFile::load(p)?,
        (None, Some(id)) => qtcov::config::preset(ExperimentId::parse(id)?),
        (None, None) => unreachable!("clap requires one of --config and --preset"),
    };
    if a.seed.is_some() {
        file.seed = a.seed;
    }
    if a.trials.is_some() {
        file.trials = a.trials;
    }
    let cfg: ExperimentConfig = file.resolve(a.profile)?;
    let dir = a
        .out_dir
        .or_else(|| cfg.output_dir.clone())
        .unwrap_or_else(|| PathBuf::from("results"));
    std::fs::create_dir_all(&dir)?;

    let quiet = a.quiet;
    let table = run_experiment_with_progress(&cfg, |done, total, p| {
        if !quiet {
            eprintln!("[{done}/{total}] d={} ruler={} n={}", p.d, p.ruler.label, p.n);
        }
    })?;
    let name = cfg.experiment.as_str();
    let csv = dir.join(format!("{name}.csv"));
    table.write_csv(BufWriter::new(File::create(&csv)?))?;
    let kind = match cfg.experiment {
        ExperimentId::Exp1 => PlotKind::Heatmap,
        ExperimentId::Exp4 => PlotKind::LineLinear,
        _ => PlotKind::LineLogLog,
    };
    let svg = dir.join(format!("{name}.svg"));
    match emit_plot(&table, kind) {
        Ok(s) => std::fs::write(&svg, s)?,
        Err(e) => eprintln!("no plot: {e}"),
    }
    if !quiet {
        eprintln!("wrote {}", csv.display());
    }
    Ok(())
}

fn doa(a: DoaArgs) -> Result<()> {
    let file = read_batch(BufReader::new(File::open(&a.batch)?))?;
    let scene = load_scene(&a.scene)?;
    let kind = parse_estimator(&a.estimator)?;
    let (rep, _) = report(&file.batch, kind, &QspaOptions::default(), None)?;
    let est = estimate_frequencies_dense(&rep.estimate.to_dense(), scene.freqs.len(), a.grid)?;
    let mse = frequency_mse(&est.freqs, &scene.freqs)?;
    let freqs: Vec<String> = est.freqs.iter().map(|f| format!("{f:.6}")).collect();
    let mut w = output(None)?;
    writeln!(w, "estimator: {}", kind.name())?;
    writeln!(w, "frequencies: {}", freqs.join(" "))?;
    writeln!(w, "mse: {mse:.6e}")?;
    if est.degenerate {
        writeln!(w, "warning: fewer peaks than sources")?;
    }
    w.flush()?;
    Ok(())
}

fn ruler(a: RulerArgs) -> Result<()> {
    let r = parse_ruler(&a.spec, a.d)?;
    let mut w = output(None)?;
    writeln!(w, "label: {}", r.label)?;
    writeln!(w, "indices: {}", r.ruler.to_list_string())?;
    writeln!(w, "size: {}", r.ruler.len())?;
    writeln!(w, "coverage: {:.6}", r.ruler.coverage_coefficient())?;
    w.flush()?;
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let res = match cli.command {
        Command::Simulate(a) => simulate(a),
        Command::Estimate(a) => estimate(a),
        Command::Experiment(a) => experiment(a),
        Command::Doa(a) => doa(a),
        Command::Ruler(a) => ruler(a),
    };
    match res {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

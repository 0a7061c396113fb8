//! Command-line front end for the authentication pipeline.
//!
//! Exit codes: 0 success, 1 input error, 2 config error, 3 internal
//! invariant failure.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use contauth::classifiers::{Algorithm, TrainError};
use contauth::fusion;
use contauth::harness::{
    self, emit_files, generate_synthetic, parse_report, HarnessError, ReportFormat,
    RunConfig, SyntheticSpec,
};
use contauth::ingest::{self, ColumnMapping};

#[derive(Parser)]
#[command(name = "contauth", version, about = "Multi-modal behavioral biometric authentication pipeline")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Ingest touch + motion exports and write the fused canonical CSV.
    Fuse {
        /// Touch-dynamics (BioIdent-style) CSV export.
        #[arg(long)]
        bioident: PathBuf,
        /// Motion (HMOG-style) CSV export.
        #[arg(long)]
        hmog: PathBuf,
        /// Column-mapping file (`field = source_column` lines).
        #[arg(long)]
        mapping: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output canonical CSV path.
        #[arg(long)]
        out: PathBuf,
    },
    /// Generate a synthetic fused dataset.
    Synth {
        #[command(flatten)]
        spec: SynthArgs,
        /// Output canonical CSV path.
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the full experiment: every roster user under each algorithm.
    Run {
        #[command(flatten)]
        dataset: DatasetArgs,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// rf, svm, knn or all.
        #[arg(long, default_value = "all")]
        algo: String,
        /// Hyperparameter config file (`key = value` lines).
        #[arg(long)]
        config: Option<PathBuf>,
        /// Output directory for reports.
        #[arg(long)]
        out: PathBuf,
        /// Report formats (repeatable): csv, json-like, roc.
        #[arg(long)]
        format: Vec<String>,
    },
    /// Evaluate a single target user and print its metrics.
    EvalUser {
        #[command(flatten)]
        dataset: DatasetArgs,
        #[arg(long)]
        user: String,
        #[arg(long, default_value = "all")]
        algo: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Re-emit reports from a stored results file.
    Report {
        /// Previously written report.txt.
        #[arg(long)]
        results: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        format: Vec<String>,
    },
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long, default_value_t = 51)]
    users: usize,
    #[arg(long, default_value_t = 100)]
    samples: usize,
    #[arg(long, default_value_t = 10.0)]
    separation: f64,
    #[arg(long, default_value_t = 1.0)]
    noise: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

impl SynthArgs {
    fn spec(&self) -> SyntheticSpec {
        SyntheticSpec {
            users: self.users,
            samples_per_user: self.samples,
            separation: self.separation,
            noise_std: self.noise,
            seed: self.seed,
        }
    }
}

#[derive(Args)]
struct DatasetArgs {
    /// Canonical CSV dataset (from `fuse` or `synth`).
    #[arg(long, conflicts_with = "synthetic")]
    dataset: Option<PathBuf>,
    /// Generate a default synthetic dataset instead of reading one.
    #[arg(long)]
    synthetic: bool,
    #[arg(long, default_value_t = 0)]
    synth_seed: u64,
}

struct CliError {
    code: u8,
    message: String,
}

impl CliError {
    fn input(message: impl Into<String>) -> Self {
        Self { code: 1, message: message.into() }
    }

    fn config(message: impl Into<String>) -> Self {
        Self { code: 2, message: message.into() }
    }

    fn internal(message: impl Into<String>) -> Self {
        Self { code: 3, message: message.into() }
    }
}

impl From<HarnessError> for CliError {
    fn from(e: HarnessError) -> Self {
        match &e {
            HarnessError::Fusion(_) | HarnessError::Io(_) | HarnessError::ReportParse(_) => {
                CliError::input(e.to_string())
            }
            HarnessError::InvalidSpec(_) | HarnessError::Train(TrainError::InvalidConfig(_)) => {
                CliError::config(e.to_string())
            }
            _ => CliError::internal(e.to_string()),
        }
    }
}

fn read_file(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path)
        .map_err(|e| CliError::input(format!("cannot read {}: {e}", path.display())))
}

fn load_dataset(args: &DatasetArgs) -> Result<fusion::FusedDataset, CliError> {
    if args.synthetic {
        return generate_synthetic(&SyntheticSpec {
            seed: args.synth_seed,
            ..Default::default()
        })
        .map_err(CliError::from);
    }
    let path = args
        .dataset
        .as_ref()
        .ok_or_else(|| CliError::config("one of --dataset or --synthetic is required"))?;
    ingest::read_canonical(&read_file(path)?, None)
        .map_err(|e| CliError::input(format!("{}: {e}", path.display())))
}

fn parse_algorithms(algo: &str) -> Result<Vec<Algorithm>, CliError> {
    if algo == "all" {
        return Ok(vec![Algorithm::Rf, Algorithm::Svm, Algorithm::Knn]);
    }
    algo.split(',')
        .map(|a| a.parse::<Algorithm>().map_err(CliError::config))
        .collect()
}

fn parse_formats(formats: &[String]) -> Result<Vec<ReportFormat>, CliError> {
    if formats.is_empty() {
        return Ok(vec![ReportFormat::Text, ReportFormat::Csv, ReportFormat::Roc]);
    }
    formats
        .iter()
        .map(|f| f.parse::<ReportFormat>().map_err(CliError::config))
        .collect()
}

/// Applies `key = value` hyperparameter overrides to all three per-
/// algorithm configs and records them for the report echo.
fn apply_config_file(run: &mut RunConfig, path: &Path) -> Result<(), CliError> {
    let text = read_file(path)?;
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| CliError::config(format!("{}:{}: expected `key = value`", path.display(), i + 1)))?;
        let (key, value) = (key.trim(), value.trim());
        let bad = |what: &str| CliError::config(format!("{}:{}: bad {what} `{value}`", path.display(), i + 1));
        for cfg in [&mut run.rf, &mut run.svm, &mut run.knn] {
            match key {
                "rf_trees" => cfg.rf_trees = value.parse().map_err(|_| bad("count"))?,
                "rf_max_depth" => {
                    cfg.rf_max_depth = if value == "none" {
                        None
                    } else {
                        Some(value.parse().map_err(|_| bad("depth"))?)
                    }
                }
                "rf_min_leaf" => cfg.rf_min_leaf = value.parse().map_err(|_| bad("count"))?,
                "rf_features_per_split" => {
                    cfg.rf_features_per_split = value.parse().map_err(|_| bad("count"))?
                }
                "rf_bootstrap" => cfg.rf_bootstrap = value.parse().map_err(|_| bad("bool"))?,
                "knn_k" => cfg.knn_k = value.parse().map_err(|_| bad("count"))?,
                "svm_c" => cfg.svm_c = value.parse().map_err(|_| bad("number"))?,
                "svm_kernel" => {
                    cfg.svm_kernel = contauth::classifiers::Kernel::from_name(value)
                        .ok_or_else(|| bad("kernel"))?
                }
                "svm_gamma" => cfg.svm_gamma = value.parse().map_err(|_| bad("number"))?,
                "svm_tol" => cfg.svm_tol = value.parse().map_err(|_| bad("number"))?,
                "svm_max_passes" => cfg.svm_max_passes = value.parse().map_err(|_| bad("count"))?,
                other => return Err(CliError::config(format!("{}:{}: unknown key `{other}`", path.display(), i + 1))),
            }
        }
        run.config_echo.push((key.to_string(), value.to_string()));
    }
    for cfg in [&run.rf, &run.svm, &run.knn] {
        cfg.validate()
            .map_err(|e| CliError::config(e.to_string()))?;
    }
    Ok(())
}

fn cmd_fuse(
    bioident: &Path,
    hmog: &Path,
    mapping: Option<&PathBuf>,
    seed: u64,
    out: &Path,
) -> Result<(), CliError> {
    let mapping = match mapping {
        Some(path) => ColumnMapping::parse(&read_file(path)?)
            .map_err(|e| CliError::config(format!("{}: {e}", path.display())))?,
        None => ColumnMapping::identity(),
    };
    let strokes = ingest::parse_bioident(&read_file(bioident)?, &mapping)
        .map_err(|e| CliError::input(format!("{}: {e}", bioident.display())))?;
    let motions = ingest::parse_hmog(&read_file(hmog)?, &mapping)
        .map_err(|e| CliError::input(format!("{}: {e}", hmog.display())))?;

    let touch_users: Vec<String> = dedup_users(strokes.iter().map(|s| s.user_id.clone()));
    let motion_users: Vec<String> = dedup_users(motions.iter().map(|m| m.user_id.clone()));
    let pairing = fusion::identity_pairing(&touch_users, &motion_users)
        .map_err(|e| CliError::input(e.to_string()))?;
    let dataset = fusion::fuse(&strokes, &motions, &pairing, seed)
        .map_err(|e| CliError::input(e.to_string()))?;

    std::fs::write(out, ingest::write_canonical(&dataset))
        .map_err(|e| CliError::input(format!("cannot write {}: {e}", out.display())))?;
    println!(
        "fused {} samples from {} users -> {}",
        dataset.samples().len(),
        dataset.roster().len(),
        out.display()
    );
    println!("dataset fingerprint: {}", dataset.content_hash());
    Ok(())
}

fn dedup_users(ids: impl Iterator<Item = String>) -> Vec<String> {
    let mut users: Vec<String> = ids.collect();
    users.sort();
    users.dedup();
    users
}

fn build_run_config(
    seed: u64,
    algo: &str,
    config: Option<&PathBuf>,
) -> Result<RunConfig, CliError> {
    let mut run = RunConfig::new(seed);
    run.algorithms = parse_algorithms(algo)?;
    run.config_echo
        .push(("algorithms".to_string(), algo.to_string()));
    if let Some(path) = config {
        apply_config_file(&mut run, path)?;
    }
    Ok(run)
}

fn cmd_run(
    dataset_args: &DatasetArgs,
    seed: u64,
    algo: &str,
    config: Option<&PathBuf>,
    out: &Path,
    formats: &[String],
) -> Result<(), CliError> {
    let formats = parse_formats(formats)?;
    let run = build_run_config(seed, algo, config)?;
    let dataset = load_dataset(dataset_args)?;
    let report = harness::run_all(&dataset, &run)?;
    emit_files(&report, out, &formats)?;

    // split audit manifest, regenerated deterministically from the seed
    let splits = fusion::split_all(&dataset, seed).map_err(HarnessError::from)?;
    let manifest: String = splits.iter().map(|s| s.manifest()).collect();
    std::fs::write(out.join("splits.txt"), manifest)
        .map_err(|e| CliError::input(format!("cannot write splits: {e}")))?;

    println!("dataset fingerprint: {}", report.dataset_fingerprint);
    for algo_report in &report.algos {
        let a = &algo_report.average;
        println!(
            "{}: accuracy {:.2}% precision {:.2}% recall {:.2}% f1 {:.2}% eer {:.2}% auc {:.4}",
            algo_report.algorithm.name(),
            a.accuracy * 100.0,
            a.precision * 100.0,
            a.recall * 100.0,
            a.f1 * 100.0,
            a.eer * 100.0,
            a.auc
        );
    }
    println!("report written to {}", out.display());
    Ok(())
}

fn cmd_eval_user(
    dataset_args: &DatasetArgs,
    user: &str,
    algo: &str,
    seed: u64,
    config: Option<&PathBuf>,
) -> Result<(), CliError> {
    let run = build_run_config(seed, algo, config)?;
    let dataset = load_dataset(dataset_args)?;
    for &algorithm in &run.algorithms {
        let r = harness::run_user(&dataset, user, algorithm, &run)?;
        println!(
            "{} {}: accuracy {:.2}% precision {:.2}% recall {:.2}% f1 {:.2}% eer {:.2}% auc {:.4} (tp {} fp {} tn {} fn {})",
            user,
            algorithm.name(),
            r.accuracy * 100.0,
            r.precision * 100.0,
            r.recall * 100.0,
            r.f1 * 100.0,
            r.eer * 100.0,
            r.auc,
            r.confusion.tp,
            r.confusion.fp,
            r.confusion.tn,
            r.confusion.fn_
        );
    }
    Ok(())
}

fn cmd_report(results: &Path, out: &Path, formats: &[String]) -> Result<(), CliError> {
    let formats = parse_formats(formats)?;
    let report = parse_report(&read_file(results)?)?;
    emit_files(&report, out, &formats)?;
    println!("re-emitted {} to {}", results.display(), out.display());
    Ok(())
}

fn run_cli(cli: Cli) -> Result<(), CliError> {
    match &cli.command {
        Command::Fuse {
            bioident,
            hmog,
            mapping,
            seed,
            out,
        } => cmd_fuse(bioident, hmog, mapping.as_ref(), *seed, out),
        Command::Synth { spec, out } => {
            let dataset = generate_synthetic(&spec.spec())?;
            std::fs::write(out, ingest::write_canonical(&dataset))
                .map_err(|e| CliError::input(format!("cannot write {}: {e}", out.display())))?;
            println!(
                "wrote {} samples ({} users) to {}",
                dataset.samples().len(),
                dataset.roster().len(),
                out.display()
            );
            println!("dataset fingerprint: {}", dataset.content_hash());
            Ok(())
        }
        Command::Run {
            dataset,
            seed,
            algo,
            config,
            out,
            format,
        } => cmd_run(dataset, *seed, algo, config.as_ref(), out, format),
        Command::EvalUser {
            dataset,
            user,
            algo,
            seed,
            config,
        } => cmd_eval_user(dataset, user, algo, *seed, config.as_ref()),
        Command::Report { results, out, format } => cmd_report(results, out, format),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run_cli(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}

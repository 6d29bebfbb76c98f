//! Command-line front end: `generate`, `estimate`, `run`, `calibrate`.
//!
//! Exit codes: 0 on success, 1 on I/O or spec errors, 2 when a run finishes
//! but an invariant check fails.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::estimator::{estimate, EstimatorConfig};
use crate::harness::{calibrate_constants, run_plan, write_outputs, ExperimentPlan, OutputFormat};
use crate::linalg::{read_matrix, write_matrix};
use crate::model::{assemble_model, check_model, export_model, ModelSpec};

#[derive(Debug, Parser)]
#[command(name = "lvgm", version, about = "Latent-variable graphical model selection")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

impl From<Format> for OutputFormat {
    fn from(f: Format) -> Self {
        match f {
            Format::Csv => OutputFormat::Csv,
            Format::Json => OutputFormat::Json,
        }
    }
}

#[derive(Debug, Args)]
pub struct Common {
    /// Overrides the seed in the spec or plan.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    /// Worker threads (defaults to all cores).
    #[arg(long)]
    pub threads: Option<usize>,
    #[arg(long, value_enum, default_value = "csv")]
    pub format: Format,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a ground-truth model from a JSON spec and write its matrices.
    Generate {
        /// JSON file holding a model spec.
        #[arg(long)]
        spec: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Run the estimator on a sample covariance matrix file.
    Estimate {
        /// Sample covariance in the matrix text format.
        #[arg(long)]
        input: PathBuf,
        /// Sample size behind the covariance.
        #[arg(long)]
        n: usize,
        /// JSON estimator config; defaults apply when omitted.
        #[arg(long)]
        config: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Execute an experiment plan.
    Run {
        #[arg(long)]
        plan: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Calibrate C1, C2 and C3 with pilot replicates.
    Calibrate {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long, default_value_t = 200)]
        pilots: usize,
        /// Base estimator config for the non-calibrated fields.
        #[arg(long)]
        config: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Debug)]
enum Failure {
    Setup(String),
    Violation(String),
}

impl<E: std::error::Error> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure::Setup(e.to_string())
    }
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::Setup(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Failure::Setup(format!("{}: {e}", path.display())))
}

fn with_threads<T>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T, Failure>
where
    T: Send,
{
    match threads {
        None => Ok(f()),
        Some(k) => Ok(rayon::ThreadPoolBuilder::new()
            .num_threads(k.max(1))
            .build()?
            .install(f)),
    }
}

fn generate(spec_path: &Path, common: &Common) -> Result<(), Failure> {
    let mut spec: ModelSpec = read_json(spec_path)?;
    if let Some(seed) = common.seed {
        spec.seed = seed;
    }
    let model = assemble_model(&spec)?;
    export_model(&model, &common.out)?;
    check_model(&model).map_err(|e| Failure::Violation(e.to_string()))?;
    println!(
        "wrote model (p = {}, rank {}, |support| = {}) to {}",
        spec.p,
        model.true_rank,
        model.support.len(),
        common.out.display()
    );
    Ok(())
}

fn run_estimate(
    input: &Path,
    n: usize,
    config: Option<&Path>,
    common: &Common,
) -> Result<(), Failure> {
    let cfg: EstimatorConfig = match config {
        Some(p) => read_json(p)?,
        None => EstimatorConfig::default(),
    };
    let sigma_n = read_matrix(input)?;
    let result = with_threads(common.threads, || estimate(&sigma_n, n, &cfg))??;
    let out = &common.out;
    std::fs::create_dir_all(out)?;
    std::fs::write(out.join("S_hat.txt"), write_matrix(&result.sparse.s_hat))?;
    std::fs::write(out.join("S_tilde.txt"), write_matrix(&result.sparse.s_tilde))?;
    std::fs::write(out.join("L_hat.txt"), write_matrix(&result.lowrank.l_hat))?;
    std::fs::write(out.join("L_tilde.txt"), write_matrix(&result.lowrank.l_tilde))?;
    let summary = result.summary();
    std::fs::write(
        out.join("estimate.json"),
        serde_json::to_string_pretty(&summary)?,
    )?;
    println!(
        "tau_n = {:.6}, support size = {}, rank estimate = {}",
        summary.tau_n, summary.support_size, summary.rank_estimate
    );
    if !result.is_feasible() {
        return Err(Failure::Violation(format!(
            "feasibility slack {} exceeds tau_n = {}",
            summary.feasibility_slack, summary.tau_n
        )));
    }
    Ok(())
}

fn run(plan_path: &Path, common: &Common) -> Result<(), Failure> {
    let mut plan: ExperimentPlan = read_json(plan_path)?;
    if let Some(seed) = common.seed {
        plan.base_spec.seed = seed;
    }
    let threads = common
        .threads
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    let outcome = run_plan(&plan, threads)?;
    write_outputs(&outcome, &common.out, common.format.into())?;
    for c in &outcome.cells {
        println!(
            "cell {:>3} {:?}: sign {:.3} rank {:.3} event_A {:.3} sup {:.4} spectral {:.4} failures {}",
            c.cell,
            c.assignment,
            c.sign_recovery_rate,
            c.rank_recovery_rate,
            c.event_a_rate,
            c.sup_error.mean,
            c.spectral_error.mean,
            c.failures
        );
    }
    match outcome.invariant_violations() {
        0 => Ok(()),
        k => Err(Failure::Violation(format!("{k} invariant violations"))),
    }
}

fn calibrate(
    spec_path: &Path,
    pilots: usize,
    config: Option<&Path>,
    common: &Common,
) -> Result<(), Failure> {
    let mut spec: ModelSpec = read_json(spec_path)?;
    if let Some(seed) = common.seed {
        spec.seed = seed;
    }
    let base: EstimatorConfig = match config {
        Some(p) => read_json(p)?,
        None => EstimatorConfig::default(),
    };
    let cal = with_threads(common.threads, || calibrate_constants(&spec, pilots, &base))??;
    std::fs::create_dir_all(&common.out)?;
    std::fs::write(
        common.out.join("calibration.json"),
        serde_json::to_string_pretty(&cal)?,
    )?;
    let cfg = EstimatorConfig {
        mp_proxy: spec.mp,
        ..cal.apply(&base)
    };
    std::fs::write(
        common.out.join("estimator_config.json"),
        serde_json::to_string_pretty(&cfg)?,
    )?;
    println!("C1 = {:.6}, C2 = {:.6}, C3 = {:.6}", cal.c1, cal.c2, cal.c3);
    Ok(())
}

/// Parses `args` and runs the selected command.
pub fn main_with_args<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let outcome = match &cli.command {
        Command::Generate { spec, common } => generate(spec, common),
        Command::Estimate {
            input,
            n,
            config,
            common,
        } => run_estimate(input, *n, config.as_deref(), common),
        Command::Run { plan, common } => run(plan, common),
        Command::Calibrate {
            spec,
            pilots,
            config,
            common,
        } => calibrate(spec, *pilots, config.as_deref(), common),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Setup(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Violation(msg)) => {
            eprintln!("invariant violation: {msg}");
            ExitCode::from(2)
        }
    }
}

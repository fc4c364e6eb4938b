//! Command-line surface: dataset simulation, evaluation, learning and the
//! two simulation studies, writing JSON reports and CSV tables.

pub mod config;
pub mod tables;

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;
use thiserror::Error;

use mvope::estimators::{EssMethod, EstimatorKind, EvaluationReport};
use mvope::io::{read_dataset, write_dataset_with};
use mvope::learner::default_init;
use mvope::simulation::{
    make_coverage_dataset, make_learning_benchmark, min_sample_size_for_coverage, run_cod_study,
    run_coverage_study, with_workers,
};
use mvope::{evaluate, learn, KernelConfig, Policy, RngSeed};

use config::{CodRunConfig, CoverageRunConfig, LearnRunConfig};

/// Environment variable overriding the simulation worker count.
pub const WORKERS_ENV: &str = "MVOPE_WORKERS";

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 1;
pub const EXIT_IO: i32 = 2;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Validation(String),
    #[error("{0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => EXIT_VALIDATION,
            CliError::Io(_) => EXIT_IO,
        }
    }
}

impl From<mvope::Error> for CliError {
    fn from(e: mvope::Error) -> Self {
        if e.is_io() {
            CliError::Io(e.to_string())
        } else {
            CliError::Validation(e.to_string())
        }
    }
}

type CliResult<T> = Result<T, CliError>;

#[derive(Parser, Debug)]
#[command(
    name = "mvope",
    version,
    about = "Multivariate continuous-action off-policy evaluation and learning"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum Env {
    CoverageLogging,
    Benchmark,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum KindArg {
    Ips,
    Snips,
}

impl From<KindArg> for EstimatorKind {
    fn from(k: KindArg) -> Self {
        match k {
            KindArg::Ips => EstimatorKind::Ips,
            KindArg::Snips => EstimatorKind::Snips,
        }
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum MethodArg {
    Clt,
    P2,
    P2r,
    Dinf,
    Dinfr,
}

impl From<MethodArg> for EssMethod {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::Clt => EssMethod::CltOnly,
            MethodArg::P2 => EssMethod::P2,
            MethodArg::P2r => EssMethod::P2R,
            MethodArg::Dinf => EssMethod::DInf,
            MethodArg::Dinfr => EssMethod::DInfR,
        }
    }
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a logged dataset from a synthetic environment.
    Simulate {
        #[arg(long, value_enum)]
        env: Env,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        d: usize,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        meta: PathBuf,
    },
    /// Estimate a target policy's value, one report per kernel bandwidth.
    Evaluate {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        meta: PathBuf,
        #[arg(long)]
        target: PathBuf,
        /// Comma-separated isotropic bandwidths; required for deterministic targets.
        #[arg(long, value_delimiter = ',')]
        kernel_sigma: Vec<f64>,
        #[arg(long, value_enum, default_value = "snips")]
        kind: KindArg,
        #[arg(long, value_enum, default_value = "dinfr")]
        ess_method: MethodArg,
        #[arg(long, default_value_t = 0.05)]
        alpha: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Learn a deterministic policy by maximising the pessimistic lower bound.
    Learn {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        meta: PathBuf,
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the interval-coverage simulation.
    Coverage {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Smallest sample size reaching a coverage level, per method.
    Reduction {
        #[arg(long)]
        table: PathBuf,
        #[arg(long)]
        level: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Distance CDFs and centred-box masses across dimensions.
    Cod {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out_cdf: PathBuf,
        #[arg(long)]
        out_mass: PathBuf,
    },
}

fn read_text(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

fn write_text(path: &Path, text: &str) -> CliResult<()> {
    fs::write(path, text).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> CliResult<T> {
    let text = read_text(path)?;
    serde_json::from_str(&text)
        .map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    let mut text =
        serde_json::to_string_pretty(value).map_err(|e| CliError::Validation(e.to_string()))?;
    text.push('\n');
    write_text(path, &text)
}

fn check_distinct(paths: &[&Path]) -> CliResult<()> {
    for (i, a) in paths.iter().enumerate() {
        if paths[i + 1..].contains(a) {
            return Err(CliError::Validation(format!(
                "path {} used more than once",
                a.display()
            )));
        }
    }
    Ok(())
}

fn workers() -> CliResult<Option<usize>> {
    match std::env::var(WORKERS_ENV) {
        Ok(v) => v.trim().parse::<usize>().map(Some).map_err(|_| {
            CliError::Validation(format!(
                "{WORKERS_ENV} must be a positive integer, got '{v}'"
            ))
        }),
        Err(_) => Ok(None),
    }
}

#[derive(Serialize)]
struct KernelReport {
    kernel_sigma: Option<f64>,
    #[serde(flatten)]
    report: EvaluationReport<f64>,
}

fn run(command: Command) -> CliResult<()> {
    match command {
        Command::Simulate {
            env,
            n,
            d,
            seed,
            out,
            meta,
        } => {
            check_distinct(&[&out, &meta])?;
            let seed = RngSeed::new(seed, 0);
            let (ds, tag) = match env {
                Env::CoverageLogging => (make_coverage_dataset(seed, n, d)?, "coverage-logging"),
                Env::Benchmark => (make_learning_benchmark(seed, n, d)?, "benchmark"),
            };
            let created_by = format!("mvope simulate --env {tag} --seed {}", seed.master_seed);
            write_dataset_with(&ds, &out, &meta, &created_by)?;
        }
        Command::Evaluate {
            data,
            meta,
            target,
            kernel_sigma,
            kind,
            ess_method,
            alpha,
            out,
        } => {
            check_distinct(&[&data, &meta, &target, &out])?;
            let ds = read_dataset(&data, &meta)?;
            let target: Policy<f64> = read_json(&target)?;
            target.validate()?;
            let kind = kind.into();
            let method = ess_method.into();
            let mut reports = Vec::new();
            if target.is_deterministic() {
                if kernel_sigma.is_empty() {
                    return Err(CliError::Validation(
                        "deterministic target needs --kernel-sigma".into(),
                    ));
                }
                for sigma in kernel_sigma {
                    let kernel = KernelConfig::isotropic(sigma, ds.dim())?;
                    let report = evaluate(&ds, &target, Some(&kernel), kind, method, alpha)?;
                    reports.push(KernelReport {
                        kernel_sigma: Some(sigma),
                        report,
                    });
                }
            } else {
                if !kernel_sigma.is_empty() {
                    return Err(CliError::Validation(
                        "--kernel-sigma only applies to deterministic targets".into(),
                    ));
                }
                let report = evaluate(&ds, &target, None, kind, method, alpha)?;
                reports.push(KernelReport {
                    kernel_sigma: None,
                    report,
                });
            }
            write_json(&out, &reports)?;
        }
        Command::Learn {
            data,
            meta,
            config,
            out,
        } => {
            check_distinct(&[&data, &meta, &config, &out])?;
            let ds = read_dataset(&data, &meta)?;
            let cfg: LearnRunConfig = read_json(&config)?;
            let init = cfg.init.unwrap_or_else(|| default_init(&ds));
            let result = learn(&ds, &cfg.crm, &init)?;
            write_json(&out, &result)?;
        }
        Command::Coverage { config, out } => {
            check_distinct(&[&config, &out])?;
            let cfg = read_json::<CoverageRunConfig>(&config)?.resolve()?;
            let rows = with_workers(workers()?, || run_coverage_study(&cfg))?;
            write_text(&out, &tables::coverage_csv(&rows)?)?;
        }
        Command::Reduction { table, level, out } => {
            check_distinct(&[&table, &out])?;
            if !(level > 0.0 && level < 1.0) {
                return Err(CliError::Validation(format!(
                    "level must lie in (0, 1), got {level}"
                )));
            }
            let rows = tables::read_coverage_csv(&table)?;
            let reduction = min_sample_size_for_coverage(&rows, level);
            write_text(&out, &tables::reduction_csv(&reduction)?)?;
        }
        Command::Cod {
            config,
            out_cdf,
            out_mass,
        } => {
            check_distinct(&[&config, &out_cdf, &out_mass])?;
            let cfg = read_json::<CodRunConfig>(&config)?.resolve()?;
            let study = with_workers(workers()?, || run_cod_study(&cfg))?;
            write_text(&out_cdf, &tables::cdf_csv(&study.cdf)?)?;
            write_text(&out_mass, &tables::mass_csv(&study.mass)?)?;
        }
    }
    Ok(())
}

/// Parses `argv` (including the program name), runs the command and returns
/// the process exit code: 0 on success, 1 on validation errors, 2 on I/O errors.
pub fn run_cli<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    print!("{e}");
                    EXIT_OK
                }
                _ => {
                    eprint!("{}", e.render());
                    EXIT_VALIDATION
                }
            };
        }
    };
    match run(cli.command) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

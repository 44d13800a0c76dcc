//! Command-line experiments over the `infofit` library: dataset generation,
//! objective sweeps, SPSA fits and ad-hoc estimates, all writing CSV.

use std::io::Write;
use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};
use infofit::dynamics::CogParam;
use infofit::objectives::ObjectiveKind;
use thiserror::Error;

pub mod commands;
pub mod config;
pub mod estimate;
pub mod fixtures;

pub use config::RunConfig;

pub const DEFAULT_OUT_DIR: &str = "infofit_out";

#[derive(Debug, Error)]
pub enum CliError {
    /// Config or validation failure; exit code 2.
    #[error("config error: {0}")]
    Config(String),
    /// Malformed input file; exit code 2.
    #[error("invalid input: {0}")]
    Input(String),
    /// Anything that fails after validation; exit code 1.
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Input(_) => 2,
            CliError::Runtime(_) => 1,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "infofit", version, about = "Information-theoretic fitting of hidden-layer models")]
pub struct Cli {
    /// TOML experiment config; every section is optional.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    #[arg(long, global = true, env = "INFOFIT_OUT_DIR")]
    pub out_dir: Option<PathBuf>,

    /// Worker threads for sweeps and integration.
    #[arg(long, global = true, env = "INFOFIT_THREADS")]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate task schedules and outcomes into a dataset directory.
    Generate {
        #[arg(long)]
        n_series: Option<usize>,
        #[arg(long)]
        n_tasks: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Sweep the candidate decay rate of the toy model, one CSV per (λ, a, form).
    ToySweep,
    /// One-parameter sweeps of each objective around the generating parameters.
    Sweep {
        #[arg(long)]
        data: PathBuf,
        #[arg(long = "kind", value_parser = parse_kind)]
        kinds: Vec<ObjectiveKind>,
        #[arg(long = "param", value_parser = parse_param)]
        params: Vec<CogParam>,
        #[arg(long)]
        steps: Option<usize>,
    },
    /// Joint SPSA fit from a perturbed start.
    Fit {
        #[arg(long, required_unless_present = "selftest")]
        data: Option<PathBuf>,
        #[arg(long)]
        iterations: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        /// Run the optimiser on a quadratic with a known minimiser instead.
        #[arg(long)]
        selftest: bool,
    },
    /// Run one estimator on a CSV file.
    Estimate {
        input: PathBuf,
        #[arg(long, value_enum, default_value_t = EstimateKind::Mi)]
        kind: EstimateKind,
        /// Second sample for `kl`.
        #[arg(long)]
        reference: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = MiMethod::Ksg)]
        method: MiMethod,
        /// X columns for `mi`; defaults to headers starting with `x`.
        #[arg(long, value_delimiter = ',')]
        x: Vec<String>,
        /// Y columns for `mi`; defaults to headers starting with `y`.
        #[arg(long, value_delimiter = ',')]
        y: Vec<String>,
        /// Label column for `mixed`.
        #[arg(long, default_value = "label")]
        label: String,
        #[arg(long)]
        k: Option<usize>,
        #[arg(long)]
        bits: bool,
    },
    /// Write the Gaussian and uniform oracle sample files.
    Fixtures,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum EstimateKind {
    Mi,
    Mixed,
    Kl,
    Entropy,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MiMethod {
    Ksg,
    Lnc,
}

fn parse_kind(s: &str) -> Result<ObjectiveKind, String> {
    s.parse()
}

fn parse_param(s: &str) -> Result<CogParam, String> {
    s.parse().map_err(|e: infofit::dynamics::DynamicsError| e.to_string())
}

/// Load the config, apply command-line overrides, validate, and dispatch.
pub fn run(cli: &Cli, out: &mut dyn Write) -> Result<(), CliError> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if cli.out_dir.is_some() {
        cfg.out_dir = cli.out_dir.clone();
    }
    if cli.threads.is_some() {
        cfg.threads = cli.threads;
    }
    match &cli.command {
        Command::Generate { n_series, n_tasks, seed } => {
            if let Some(n) = n_series {
                cfg.dataset.n_series = *n;
            }
            if let Some(n) = n_tasks {
                cfg.schedule.n_tasks = *n;
            }
            if let Some(s) = seed {
                cfg.dataset.master_seed = *s;
            }
        }
        Command::Sweep { kinds, params, steps, .. } => {
            if !kinds.is_empty() {
                cfg.sweep.kinds = kinds.clone();
            }
            if !params.is_empty() {
                cfg.sweep.params = params.clone();
            }
            if let Some(s) = steps {
                cfg.sweep.steps = *s;
            }
        }
        Command::Fit { iterations, seed, .. } => {
            if let Some(n) = iterations {
                cfg.fit.spsa.iterations = *n;
            }
            if let Some(s) = seed {
                cfg.fit.spsa.seed = *s;
            }
        }
        Command::ToySweep | Command::Estimate { .. } | Command::Fixtures => {}
    }
    cfg.validate()?;
    if let Some(n) = cfg.threads {
        // Fails only if a pool already exists, e.g. on a second call in-process.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    let out_dir = cfg.out_dir.clone().unwrap_or_else(|| PathBuf::from(DEFAULT_OUT_DIR));

    match &cli.command {
        Command::Generate { .. } => {
            let s = commands::cmd_generate(&cfg, &out_dir)?;
            writeln!(
                out,
                "n_series={} n_tasks={} success_rate={:.4} alpha={} a_ref={}",
                s.n_series, s.n_tasks, s.success_rate, s.alpha, s.a_ref
            )
            .map_err(io_err)?;
        }
        Command::ToySweep => {
            for f in commands::cmd_toy_sweep(&cfg, &out_dir)? {
                writeln!(out, "{} argmax={}", f.path.display(), f.argopt).map_err(io_err)?;
            }
        }
        Command::Sweep { data, .. } => {
            for f in commands::cmd_sweep(&cfg, data, &out_dir)? {
                writeln!(out, "{} argopt={}", f.path.display(), f.argopt).map_err(io_err)?;
            }
        }
        Command::Fit { selftest: true, .. } => {
            let d = commands::cmd_fit_selftest(&cfg)?;
            writeln!(out, "selftest distance={d:e} tolerance=1e-2 ok").map_err(io_err)?;
        }
        Command::Fit { data, .. } => {
            let data = data.as_ref().ok_or_else(|| CliError::Config("--data is required".into()))?;
            let r = commands::cmd_fit(&cfg, data, &out_dir)?;
            let o = &r.outcome;
            writeln!(
                out,
                "initial_objective={} objective={} fc={} feasible={} moved={}",
                o.initial_objective, o.objective, o.fc, o.feasible, o.moved
            )
            .map_err(io_err)?;
        }
        Command::Estimate {
            input,
            kind,
            reference,
            method,
            x,
            y,
            label,
            k,
            bits,
        } => {
            let mut est = cfg.objective.estimator;
            if let Some(k) = k {
                est.k = *k;
            }
            est.validate().map_err(|e| CliError::Config(e.to_string()))?;
            let req = estimate::EstimateRequest {
                input: input.clone(),
                kind: *kind,
                reference: reference.clone(),
                method: *method,
                x: x.clone(),
                y: y.clone(),
                label: label.clone(),
            };
            let r = estimate::run_estimate(&req, &est)?;
            write!(out, "{}", r.report(*bits)).map_err(io_err)?;
        }
        Command::Fixtures => {
            for p in commands::cmd_fixtures(&cfg, &out_dir)? {
                writeln!(out, "{}", p.display()).map_err(io_err)?;
            }
        }
    }
    Ok(())
}

fn io_err(e: std::io::Error) -> CliError {
    CliError::Runtime(e.to_string())
}

//! The subcommands, as library functions over a validated [`RunConfig`].

use std::collections::BTreeMap;
use std::convert::Infallible;
use std::fs;
use std::path::{Path, PathBuf};

use infofit::datagen::io::{generator_version, read_dataset, write_dataset};
use infofit::datagen::{generate_dataset, DatagenError, Dataset};
use infofit::dynamics::{CogParams, ToyConfig};
use infofit::objectives::{Direction, ObjectiveKind};
use infofit::optimize::{
    fit_parameters, history_csv, multiplicative_grid, run_sweep, spsa_minimize, Evaluation, FitRun, OptimizeError,
    ParamSpace, SpsaConfig, SpsaRecord, SweepCurve, SweepSpec, SweepTarget,
};
use serde::Serialize;

use crate::config::RunConfig;
use crate::fixtures::all_fixtures;
use crate::CliError;

/// First comment line of every CSV this tool writes.
pub fn header_comment(cfg: &RunConfig) -> String {
    format!("{} config_hash={}", generator_version(), cfg.hash())
}

fn direction_name(d: Direction) -> &'static str {
    match d {
        Direction::Maximize => "maximize",
        Direction::Minimize => "minimize",
    }
}

fn write(path: &Path, contents: &str) -> Result<(), CliError> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| CliError::Runtime(format!("{}: {e}", dir.display())))?;
    }
    fs::write(path, contents).map_err(|e| CliError::Runtime(format!("{}: {e}", path.display())))
}

fn datagen_err(e: DatagenError) -> CliError {
    match e {
        DatagenError::InvalidConfig(m) => CliError::Config(m),
        DatagenError::Format(m) => CliError::Input(m),
        e => CliError::Runtime(e.to_string()),
    }
}

fn optimize_err(e: OptimizeError) -> CliError {
    match e {
        OptimizeError::InvalidConfig(m) => CliError::Config(m),
        e => CliError::Runtime(e.to_string()),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GenerateSummary {
    pub n_series: usize,
    pub n_tasks: usize,
    pub success_rate: f64,
    pub alpha: f64,
    pub a_ref: f64,
}

pub fn build_dataset(cfg: &RunConfig) -> Result<Dataset, CliError> {
    generate_dataset(
        &cfg.model,
        &cfg.schedule,
        cfg.dataset.n_series,
        &cfg.outcome,
        cfg.dataset.master_seed,
        &cfg.integration,
    )
    .map_err(datagen_err)
}

pub fn cmd_generate(cfg: &RunConfig, out_dir: &Path) -> Result<GenerateSummary, CliError> {
    let data = build_dataset(cfg)?;
    write_dataset(out_dir, &data, &header_comment(cfg)).map_err(datagen_err)?;
    Ok(GenerateSummary {
        n_series: data.series.len(),
        n_tasks: data.task_count(),
        success_rate: data.success_rate(),
        alpha: data.outcome_model.alpha,
        a_ref: data.outcome_model.a_ref,
    })
}

#[derive(Debug, Clone)]
pub struct CurveFile {
    pub path: PathBuf,
    pub argopt: f64,
    pub curve: SweepCurve,
}

fn curve_comments(cfg: &RunConfig, c: &SweepCurve, extra: &str) -> Vec<String> {
    vec![
        header_comment(cfg),
        format!(
            "param={} generating_value={} kind={} direction={}{extra}",
            c.param,
            c.generating_value,
            c.kind,
            direction_name(c.direction)
        ),
    ]
}

fn save_curve(cfg: &RunConfig, curve: SweepCurve, path: PathBuf, extra: &str) -> Result<CurveFile, CliError> {
    write(&path, &curve.to_csv(&curve_comments(cfg, &curve, extra)))?;
    Ok(CurveFile {
        argopt: curve.argopt().unwrap_or(f64::NAN),
        path,
        curve,
    })
}

pub fn cmd_toy_sweep(cfg: &RunConfig, out_dir: &Path) -> Result<Vec<CurveFile>, CliError> {
    let toy = &cfg.toy;
    let grid = toy.grid.points();
    let t_grid = toy.time_grid.points();
    let mut files = Vec::new();
    for case in &toy.cases {
        for &form in &toy.forms {
            let spec = SweepSpec {
                target: SweepTarget::Toy {
                    config: ToyConfig {
                        lambda_true: case.lambda,
                        a: case.a,
                        form,
                        t_grid: t_grid.clone(),
                        noise_std: toy.noise_std,
                        seed: toy.seed,
                    },
                    estimator: toy.estimator,
                },
                grid: grid.clone(),
                objective: cfg.objective.spec(ObjectiveKind::Mi),
                parallel: true,
            };
            let curve = run_sweep(&spec, None, cfg.integration.step).map_err(optimize_err)?;
            let path = out_dir.join(format!("toy_{}_lambda{}_a{}.csv", form.name(), case.lambda, case.a));
            let extra = format!(" form={} a={}", form.name(), case.a);
            files.push(save_curve(cfg, curve, path, &extra)?);
        }
    }
    Ok(files)
}

/// Sweep every configured (kind, parameter) pair over `×[0.5, 2]` of the
/// dataset's generating value.
pub fn sweep_dataset(cfg: &RunConfig, data: &Dataset) -> Result<Vec<SweepCurve>, CliError> {
    let base = data.gen_params;
    let mut curves = Vec::new();
    for &kind in &cfg.sweep.kinds {
        for &param in &cfg.sweep.params {
            let spec = SweepSpec {
                target: SweepTarget::Cognitive { base, param },
                grid: multiplicative_grid(base.get(param), cfg.sweep.steps),
                objective: cfg.objective.spec(kind),
                parallel: cfg.sweep.parallel,
            };
            curves.push(run_sweep(&spec, Some(data), data.integration.step).map_err(optimize_err)?);
        }
    }
    Ok(curves)
}

pub fn cmd_sweep(cfg: &RunConfig, data_dir: &Path, out_dir: &Path) -> Result<Vec<CurveFile>, CliError> {
    let data = read_dataset(data_dir).map_err(datagen_err)?;
    sweep_dataset(cfg, &data)?
        .into_iter()
        .map(|c| {
            let path = out_dir.join(format!("sweep_{}_{}.csv", c.kind, c.param));
            save_curve(cfg, c, path, "")
        })
        .collect()
}

#[derive(Debug, Serialize)]
struct FitReport<'a> {
    generator: String,
    config_hash: String,
    kind: ObjectiveKind,
    direction: Direction,
    iterations: usize,
    generating: BTreeMap<&'a str, f64>,
    initial: BTreeMap<&'a str, f64>,
    fitted: BTreeMap<&'a str, f64>,
    initial_objective: f64,
    initial_fc: f64,
    objective: f64,
    fc: f64,
    feasible: bool,
    moved: bool,
}

fn named(space: &ParamSpace, p: &CogParams) -> BTreeMap<&'static str, f64> {
    space.params.iter().map(|&q| (q.name(), p.get(q))).collect()
}

fn natural_history(history: &[SpsaRecord], natural: &[Vec<f64>]) -> Vec<SpsaRecord> {
    history
        .iter()
        .zip(natural)
        .map(|(r, x)| SpsaRecord { x: x.clone(), ..r.clone() })
        .collect()
}

/// Fit from the perturbed start and write `fit_history.csv` (natural units)
/// and `fit_result.json`.
pub fn cmd_fit(cfg: &RunConfig, data_dir: &Path, out_dir: &Path) -> Result<FitRun, CliError> {
    let data = read_dataset(data_dir).map_err(datagen_err)?;
    fit_dataset(cfg, &data, out_dir)
}

pub fn fit_dataset(cfg: &RunConfig, data: &Dataset, out_dir: &Path) -> Result<FitRun, CliError> {
    let truth = data.gen_params;
    let start = cfg.fit.start(&truth);
    start.validate().map_err(|e| CliError::Config(e.to_string()))?;
    let space = ParamSpace::new(cfg.fit.params.clone(), start);
    let spec = cfg.objective.spec(cfg.fit.kind);
    let comments = vec![header_comment(cfg)];
    let history_path = out_dir.join("fit_history.csv");

    let run = match fit_parameters(
        &spec,
        data,
        &space,
        &start,
        &cfg.fit.natural_bounds(),
        &cfg.fit.spsa,
        data.integration.step,
    ) {
        Ok(run) => run,
        Err(OptimizeError::FitAborted {
            iteration,
            reason,
            history,
        }) => {
            // Partial history is still useful; it is in search coordinates here.
            write(&history_path, &history_csv(&history, &space.names(), &comments))?;
            return Err(CliError::Runtime(format!("fit aborted at iteration {iteration}: {reason}")));
        }
        Err(e) => return Err(optimize_err(e)),
    };

    let history = natural_history(&run.history, &run.history_natural);
    write(&history_path, &history_csv(&history, &space.names(), &comments))?;
    let o = &run.outcome;
    let report = FitReport {
        generator: generator_version(),
        config_hash: cfg.hash(),
        kind: spec.kind,
        direction: spec.direction(),
        iterations: o.iterations,
        generating: named(&space, &truth),
        initial: named(&space, &o.initial),
        fitted: named(&space, &o.fitted),
        initial_objective: o.initial_objective,
        initial_fc: o.initial_fc,
        objective: o.objective,
        fc: o.fc,
        feasible: o.feasible,
        moved: o.moved,
    };
    let json = serde_json::to_string_pretty(&report).map_err(|e| CliError::Runtime(e.to_string()))?;
    write(&out_dir.join("fit_result.json"), &(json + "\n"))?;
    Ok(run)
}

pub const SELFTEST_TARGET: [f64; 5] = [1.0, -2.0, 3.0, 0.5, -1.5];
pub const SELFTEST_TOLERANCE: f64 = 1e-2;

/// Minimise `‖x − target‖²` from the origin and return the final distance.
pub fn cmd_fit_selftest(cfg: &RunConfig) -> Result<f64, CliError> {
    let f = |x: &[f64]| -> Result<Evaluation, Infallible> {
        Ok(Evaluation::unconstrained(
            x.iter().zip(SELFTEST_TARGET).map(|(v, t)| (v - t).powi(2)).sum(),
        ))
    };
    let spsa = SpsaConfig {
        iterations: 2000,
        seed: cfg.fit.spsa.seed,
        bounds: vec![(-10.0, 10.0); SELFTEST_TARGET.len()],
        ..SpsaConfig::default()
    };
    let r = spsa_minimize(f, Direction::Minimize, &[0.0; 5], &spsa)
        .map_err(|e| CliError::Runtime(e.to_string()))?;
    let d = r
        .x_best
        .iter()
        .zip(SELFTEST_TARGET)
        .map(|(v, t)| (v - t).powi(2))
        .sum::<f64>()
        .sqrt();
    if d <= SELFTEST_TOLERANCE {
        Ok(d)
    } else {
        Err(CliError::Runtime(format!(
            "selftest failed: distance {d:e} exceeds {SELFTEST_TOLERANCE:e}"
        )))
    }
}

pub fn cmd_fixtures(cfg: &RunConfig, out_dir: &Path) -> Result<Vec<PathBuf>, CliError> {
    let comment = header_comment(cfg);
    all_fixtures(cfg.fixtures.seed, cfg.fixtures.n)
        .into_iter()
        .map(|f| {
            let path = out_dir.join(f.file_name());
            write(&path, &f.to_csv(&comment))?;
            Ok(path)
        })
        .collect()
}

//! Synthetic practice-test sessions: exponential on/off task schedules,
//! integrated resource trajectories, and logistic pass/fail outcomes.

pub mod io;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dynamics::{
    integrate_schedule, CogParams, DynamicsError, IntegrationConfig, TaskSchedule,
};
use crate::seed;

#[derive(Debug, Error)]
pub enum DatagenError {
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
    #[error("outcome calibration pool is degenerate: quantile gap is zero")]
    DegeneratePool,
    #[error("invalid config: {0}")]
    InvalidConfig(String),
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("malformed dataset: {0}")]
    Format(String),
}

pub type Result<T> = std::result::Result<T, DatagenError>;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScheduleGenConfig {
    pub n_tasks: usize,
    /// Rate of on-task durations, 1/min.
    pub lambda_on: f64,
    /// Rate of ordinary off-task durations, 1/min.
    pub lambda_off: f64,
    /// Rate of the long break after every `break_every`-th task, 1/min.
    pub lambda_break: f64,
    pub break_every: usize,
}

impl Default for ScheduleGenConfig {
    fn default() -> Self {
        Self {
            n_tasks: 300,
            lambda_on: 0.25,
            lambda_off: 0.25,
            lambda_break: 0.025,
            break_every: 10,
        }
    }
}

impl ScheduleGenConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("lambda_on", self.lambda_on),
            ("lambda_off", self.lambda_off),
            ("lambda_break", self.lambda_break),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(DatagenError::InvalidConfig(format!("{name} must be > 0, got {v}")));
            }
        }
        if self.n_tasks == 0 || self.break_every == 0 {
            return Err(DatagenError::InvalidConfig(
                "n_tasks and break_every must be >= 1".into(),
            ));
        }
        Ok(())
    }
}

fn exp_dist(rate: f64) -> Result<Exp<f64>> {
    Exp::new(rate).map_err(|e| DatagenError::InvalidConfig(e.to_string()))
}

/// Alternating on/off phases, one pair per task. The off-phase after every
/// `break_every`-th task is drawn at the break rate.
pub fn sample_schedule(cfg: &ScheduleGenConfig, seed: u64) -> Result<TaskSchedule> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let on = exp_dist(cfg.lambda_on)?;
    let off = exp_dist(cfg.lambda_off)?;
    let long = exp_dist(cfg.lambda_break)?;
    let mut durations = Vec::with_capacity(2 * cfg.n_tasks);
    for task in 1..=cfg.n_tasks {
        durations.push(positive(on.sample(&mut rng)));
        let rest = if task % cfg.break_every == 0 { &long } else { &off };
        durations.push(positive(rest.sample(&mut rng)));
    }
    Ok(TaskSchedule::from_durations(&durations)?)
}

#[inline]
fn positive(d: f64) -> f64 {
    d.max(f64::MIN_POSITIVE)
}

/// Logistic link from the primary resource to the probability of a correct
/// answer.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutcomeModel {
    /// Steepness, per resource unit.
    pub alpha: f64,
    /// Midpoint, resource units.
    pub a_ref: f64,
}

impl Default for OutcomeModel {
    /// α = 169, A₀ = 0.204.
    fn default() -> Self {
        Self {
            alpha: 169.0,
            a_ref: 0.204,
        }
    }
}

impl OutcomeModel {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha.is_finite() && self.a_ref.is_finite()) {
            return Err(DatagenError::InvalidConfig(format!(
                "outcome model needs alpha > 0 and finite a_ref, got {self:?}"
            )));
        }
        Ok(())
    }

    pub fn success_probability(&self, a: f64) -> f64 {
        1.0 / (1.0 + (-self.alpha * (a - self.a_ref)).exp())
    }
}

/// Independent Bernoulli draws with the logistic success probability.
pub fn sample_outcomes(a_end: &[f64], m: &OutcomeModel, seed: u64) -> Vec<bool> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    a_end
        .iter()
        .map(|&a| rng.random::<f64>() < m.success_probability(a))
        .collect()
}

/// Linear-interpolation sample quantile (the common "type 7" definition).
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let h = (n - 1) as f64 * q.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(n - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Choose the logistic midpoint at the pool median and the steepness so that
/// the `q_high` quantile of the pool succeeds with probability `p_high`.
pub fn calibrate_outcome_model(pool: &[f64], p_high: f64, q_high: f64) -> Result<OutcomeModel> {
    if !(p_high > 0.5 && p_high < 1.0) || !(q_high > 0.5 && q_high < 1.0) {
        return Err(DatagenError::InvalidConfig(format!(
            "p_high and q_high must lie in (0.5, 1), got {p_high}, {q_high}"
        )));
    }
    if pool.is_empty() || pool.iter().any(|v| !v.is_finite()) {
        return Err(DatagenError::DegeneratePool);
    }
    let mut sorted = pool.to_vec();
    sorted.sort_by(f64::total_cmp);
    let a_ref = quantile(&sorted, 0.5);
    let gap = quantile(&sorted, q_high) - a_ref;
    if !(gap > 0.0) {
        return Err(DatagenError::DegeneratePool);
    }
    Ok(OutcomeModel {
        alpha: (p_high / (1.0 - p_high)).ln() / gap,
        a_ref,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "lowercase", deny_unknown_fields)]
pub enum OutcomeSpec {
    Fixed { alpha: f64, a_ref: f64 },
    Calibrate { p_high: f64, q_high: f64 },
}

impl Default for OutcomeSpec {
    fn default() -> Self {
        OutcomeSpec::Calibrate {
            p_high: 0.7,
            q_high: 0.8,
        }
    }
}

/// One simulated session.
#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub seed: u64,
    pub schedule: TaskSchedule,
    /// End time of each task (min).
    pub t_end: Vec<f64>,
    /// Primary resource at the end of each task under the generating parameters.
    pub a_end: Vec<f64>,
    pub outcomes: Vec<bool>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub series: Vec<Series>,
    pub gen_params: CogParams,
    pub outcome_model: OutcomeModel,
    pub outcome_calibrated: bool,
    pub schedule_config: ScheduleGenConfig,
    pub integration: IntegrationConfig,
    pub master_seed: u64,
}

impl Dataset {
    pub fn task_count(&self) -> usize {
        self.series.iter().map(|s| s.outcomes.len()).sum()
    }

    pub fn success_rate(&self) -> f64 {
        let correct: usize = self
            .series
            .iter()
            .map(|s| s.outcomes.iter().filter(|&&o| o).count())
            .sum();
        correct as f64 / self.task_count() as f64
    }

    pub fn pooled_a_end(&self) -> Vec<f64> {
        self.series.iter().flat_map(|s| s.a_end.iter().copied()).collect()
    }

    pub fn pooled_outcomes(&self) -> Vec<bool> {
        self.series.iter().flat_map(|s| s.outcomes.iter().copied()).collect()
    }
}

/// Per-series seed under the documented derivation scheme.
pub fn series_seed(master_seed: u64, index: usize) -> u64 {
    seed::derive(master_seed, index as u64)
}

const SCHEDULE_STREAM: u64 = 0;
const OUTCOME_STREAM: u64 = 1;

pub fn generate_dataset(
    cog: &CogParams,
    sched_cfg: &ScheduleGenConfig,
    n_series: usize,
    outcome: &OutcomeSpec,
    master_seed: u64,
    integration: &IntegrationConfig,
) -> Result<Dataset> {
    let seeds: Vec<u64> = (0..n_series).map(|i| series_seed(master_seed, i)).collect();
    generate_dataset_with_seeds(cog, sched_cfg, &seeds, outcome, master_seed, integration)
}

/// As [`generate_dataset`], with explicit per-series seeds.
pub fn generate_dataset_with_seeds(
    cog: &CogParams,
    sched_cfg: &ScheduleGenConfig,
    seeds: &[u64],
    outcome: &OutcomeSpec,
    master_seed: u64,
    integration: &IntegrationConfig,
) -> Result<Dataset> {
    if seeds.is_empty() {
        return Err(DatagenError::InvalidConfig("n_series must be >= 1".into()));
    }
    cog.validate()?;
    sched_cfg.validate()?;

    let simulated: Vec<(u64, TaskSchedule, Vec<f64>, Vec<f64>)> = seeds
        .par_iter()
        .map(|&s| {
            let schedule = sample_schedule(sched_cfg, seed::derive(s, SCHEDULE_STREAM))?;
            let traj = integrate_schedule(cog, &schedule, integration)?;
            Ok((s, schedule, traj.t_end, traj.a_end))
        })
        .collect::<Result<_>>()?;

    let (model, calibrated) = match *outcome {
        OutcomeSpec::Fixed { alpha, a_ref } => (OutcomeModel { alpha, a_ref }, false),
        OutcomeSpec::Calibrate { p_high, q_high } => {
            let pool: Vec<f64> = simulated.iter().flat_map(|s| s.3.iter().copied()).collect();
            (calibrate_outcome_model(&pool, p_high, q_high)?, true)
        }
    };
    model.validate()?;

    let series = simulated
        .into_iter()
        .map(|(seed_i, schedule, t_end, a_end)| {
            let outcomes = sample_outcomes(&a_end, &model, seed::derive(seed_i, OUTCOME_STREAM));
            Series {
                seed: seed_i,
                schedule,
                t_end,
                a_end,
                outcomes,
            }
        })
        .collect();

    Ok(Dataset {
        series,
        gen_params: *cog,
        outcome_model: model,
        outcome_calibrated: calibrated,
        schedule_config: *sched_cfg,
        integration: *integration,
        master_seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::PhaseKind;
    use rand_distr::Normal;

    #[test]
    fn schedule_means_match_rates() {
        let cfg = ScheduleGenConfig {
            n_tasks: 10_000,
            ..Default::default()
        };
        let s = sample_schedule(&cfg, 42).unwrap();
        let phases = s.phases();
        let on: Vec<f64> = phases.iter().step_by(2).map(|p| p.duration).collect();
        let off: Vec<f64> = phases
            .iter()
            .skip(1)
            .step_by(2)
            .enumerate()
            .filter(|(i, _)| (i + 1) % 10 != 0)
            .map(|(_, p)| p.duration)
            .collect();
        let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
        assert!((mean(&on) - 4.0).abs() <= 0.1, "{}", mean(&on));
        assert!((mean(&on) - 4.0).abs() <= 0.03 * 4.0);
        assert!((mean(&off) - 4.0).abs() <= 0.03 * 4.0, "{}", mean(&off));
    }

    #[test]
    fn long_breaks_average_forty_minutes() {
        let cfg = ScheduleGenConfig {
            n_tasks: 100_000,
            ..Default::default()
        };
        let s = sample_schedule(&cfg, 7).unwrap();
        let breaks: Vec<f64> = s
            .phases()
            .iter()
            .skip(1)
            .step_by(2)
            .skip(9)
            .step_by(10)
            .map(|p| p.duration)
            .collect();
        assert_eq!(breaks.len(), 10_000);
        let mean = breaks.iter().sum::<f64>() / breaks.len() as f64;
        assert!((mean - 40.0).abs() <= 2.0, "{mean}");
    }

    #[test]
    fn one_task_gives_one_on_and_one_off_phase() {
        let cfg = ScheduleGenConfig {
            n_tasks: 1,
            ..Default::default()
        };
        let s = sample_schedule(&cfg, 1).unwrap();
        assert_eq!(s.phases().len(), 2);
        assert_eq!(s.phases()[0].kind, PhaseKind::On);
        assert_eq!(s.phases()[1].kind, PhaseKind::Off);
    }

    #[test]
    fn sigmoid_probabilities() {
        let m = OutcomeModel::default();
        assert_eq!(m.success_probability(m.a_ref), 0.5);
        let hi = m.success_probability(m.a_ref + 0.005);
        let lo = m.success_probability(m.a_ref - 0.005);
        let expected = 1.0 / (1.0 + (-0.845f64).exp());
        assert!((hi - expected).abs() < 1e-12);
        assert!((hi - 0.6996).abs() < 1e-4);
        assert!((lo - 0.3004).abs() < 1e-4);
    }

    #[test]
    fn outcomes_are_seeded() {
        let a: Vec<f64> = (0..200).map(|i| 0.2 + 0.0001 * i as f64).collect();
        let m = OutcomeModel::default();
        assert_eq!(sample_outcomes(&a, &m, 3), sample_outcomes(&a, &m, 3));
        assert_ne!(sample_outcomes(&a, &m, 3), sample_outcomes(&a, &m, 4));
    }

    #[test]
    fn calibration_on_gaussian_pool() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let g = Normal::new(0.204, 0.005).unwrap();
        let pool: Vec<f64> = (0..200_000).map(|_| g.sample(&mut rng)).collect();
        let m = calibrate_outcome_model(&pool, 0.7, 0.8).unwrap();
        // z_0.8 = 0.841621; alpha = ln(7/3) / (0.005·z_0.8)
        let expected = (7.0f64 / 3.0).ln() / (0.005 * 0.841_621);
        assert!((m.a_ref - 0.204).abs() < 1e-4);
        assert!((m.alpha - expected).abs() / expected < 0.01, "{}", m.alpha);
        assert!((m.alpha - 201.3).abs() < 3.0);
        assert_eq!(m.success_probability(m.a_ref), 0.5);
    }

    #[test]
    fn constant_pool_is_degenerate() {
        assert!(matches!(
            calibrate_outcome_model(&[0.3; 50], 0.7, 0.8),
            Err(DatagenError::DegeneratePool)
        ));
    }

    #[test]
    fn quantile_interpolates() {
        let v = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(quantile(&v, 0.5), 2.5);
        assert_eq!(quantile(&v, 0.0), 1.0);
        assert_eq!(quantile(&v, 1.0), 4.0);
    }

    fn small_cfg() -> ScheduleGenConfig {
        ScheduleGenConfig {
            n_tasks: 40,
            ..Default::default()
        }
    }

    #[test]
    fn dataset_shapes_and_determinism() {
        let integ = IntegrationConfig::default();
        let d1 = generate_dataset(&CogParams::default(), &small_cfg(), 3, &OutcomeSpec::default(), 9, &integ).unwrap();
        let d2 = generate_dataset(&CogParams::default(), &small_cfg(), 3, &OutcomeSpec::default(), 9, &integ).unwrap();
        assert_eq!(d1, d2);
        assert_eq!(d1.series.len(), 3);
        for s in &d1.series {
            assert_eq!(s.outcomes.len(), 40);
            assert_eq!(s.a_end.len(), 40);
            assert_eq!(s.t_end.len(), 40);
        }
        assert!(d1.outcome_calibrated);
    }

    #[test]
    fn changing_one_seed_leaves_other_series_alone() {
        let integ = IntegrationConfig::default();
        let fixed = OutcomeSpec::Fixed { alpha: 50.0, a_ref: 0.1 };
        let seeds = [11, 12, 13];
        let a = generate_dataset_with_seeds(&CogParams::default(), &small_cfg(), &seeds, &fixed, 0, &integ).unwrap();
        let b = generate_dataset_with_seeds(&CogParams::default(), &small_cfg(), &[11, 99, 13], &fixed, 0, &integ).unwrap();
        assert_eq!(a.series[0], b.series[0]);
        assert_eq!(a.series[2], b.series[2]);
        assert_ne!(a.series[1], b.series[1]);
    }
}

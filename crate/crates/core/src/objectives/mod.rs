//! Information-theoretic objectives that score a candidate parameter set by
//! how well its simulated end-of-task resource explains observed outcomes,
//! plus the ordering constraint on class means.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::datagen::Dataset;
use crate::dynamics::{integrate_schedule, CogParams, DynamicsError, IntegrationConfig};
use crate::estimators::{
    kl_knn, kl_to_gaussian, mi_mixed, Estimate, EstimatorConfig, EstimatorError,
    LabeledSampleSet, QualityFlag, SampleSet,
};

#[derive(Debug, Error)]
pub enum ObjectiveError {
    #[error(transparent)]
    Estimator(#[from] EstimatorError),
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
    #[error("dataset has no tasks")]
    EmptyDataset,
    #[error("invalid objective spec: {0}")]
    InvalidSpec(String),
}

pub type Result<T> = std::result::Result<T, ObjectiveError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ObjectiveKind {
    /// MI between end-of-task resource and outcome.
    Mi,
    /// Divergence of fitted from reference per-class resource distributions.
    KlPrior,
    /// Divergence between the correct- and incorrect-class distributions.
    KlDisjoint,
}

impl ObjectiveKind {
    pub const ALL: [ObjectiveKind; 3] = [ObjectiveKind::Mi, ObjectiveKind::KlPrior, ObjectiveKind::KlDisjoint];

    pub fn direction(self) -> Direction {
        match self {
            ObjectiveKind::Mi | ObjectiveKind::KlDisjoint => Direction::Maximize,
            ObjectiveKind::KlPrior => Direction::Minimize,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ObjectiveKind::Mi => "mi",
            ObjectiveKind::KlPrior => "kl_prior",
            ObjectiveKind::KlDisjoint => "kl_disjoint",
        }
    }
}

impl fmt::Display for ObjectiveKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ObjectiveKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| format!("unknown objective kind '{s}' (expected mi, kl_prior or kl_disjoint)"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Maximize,
    Minimize,
}

impl Direction {
    /// Map an objective value onto a loss (lower is better).
    pub fn to_loss(self, value: f64) -> f64 {
        match self {
            Direction::Maximize => -value,
            Direction::Minimize => value,
        }
    }

    /// Whether `a` is strictly better than `b`.
    pub fn is_better(self, a: f64, b: f64) -> bool {
        self.to_loss(a) < self.to_loss(b)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GaussianRef {
    pub mu: f64,
    pub sigma: f64,
}

/// Where the per-class reference distributions of the prior objective come from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum Reference {
    /// The true end-of-task resource stored with the dataset, split by outcome.
    DatasetSamples,
    /// Gaussians fitted (mean, standard deviation) to the dataset's true
    /// end-of-task resource in each outcome class.
    DatasetGaussian,
    Samples { correct: Vec<f64>, incorrect: Vec<f64> },
    Gaussian { correct: GaussianRef, incorrect: GaussianRef },
}

/// A reference resolved to concrete per-class distributions.
#[derive(Debug, Clone, PartialEq)]
pub enum ClassReference {
    Samples { correct: Vec<f64>, incorrect: Vec<f64> },
    Gaussian { correct: GaussianRef, incorrect: GaussianRef },
}

impl ClassReference {
    /// Split `a_end` by `outcomes` into per-class reference samples.
    pub fn from_samples(a_end: &[f64], outcomes: &[bool]) -> Self {
        let (correct, incorrect) = split_classes(a_end, outcomes);
        ClassReference::Samples { correct, incorrect }
    }

    /// Fit one Gaussian per outcome class to `a_end`.
    pub fn fit_gaussian(a_end: &[f64], outcomes: &[bool]) -> Self {
        let (correct, incorrect) = split_classes(a_end, outcomes);
        ClassReference::Gaussian {
            correct: fit(&correct),
            incorrect: fit(&incorrect),
        }
    }
}

fn fit(v: &[f64]) -> GaussianRef {
    let n = v.len() as f64;
    let mu = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - mu).powi(2)).sum::<f64>() / (n - 1.0);
    GaussianRef { mu, sigma: var.sqrt() }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ObjectiveSpec {
    pub kind: ObjectiveKind,
    pub estimator: EstimatorConfig,
    /// Pool (A_end, outcome) pairs across series into one estimate; otherwise
    /// average per-series values.
    pub pool_series: bool,
    /// Required by the prior objective, ignored by the others.
    pub reference: Option<Reference>,
}

impl Default for ObjectiveSpec {
    fn default() -> Self {
        Self::new(ObjectiveKind::Mi)
    }
}

impl ObjectiveSpec {
    pub fn new(kind: ObjectiveKind) -> Self {
        Self {
            kind,
            estimator: EstimatorConfig::default(),
            pool_series: true,
            reference: (kind == ObjectiveKind::KlPrior).then_some(Reference::DatasetSamples),
        }
    }

    pub fn direction(&self) -> Direction {
        self.kind.direction()
    }

    pub fn validate(&self) -> Result<()> {
        self.estimator.validate()?;
        if self.kind == ObjectiveKind::KlPrior && self.reference.is_none() {
            return Err(ObjectiveError::InvalidSpec("kl_prior requires a reference".into()));
        }
        if let Some(Reference::Gaussian { correct, incorrect }) = &self.reference {
            if !(correct.sigma > 0.0 && incorrect.sigma > 0.0) {
                return Err(ObjectiveError::InvalidSpec("reference sigma must be > 0".into()));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveValue {
    pub kind: ObjectiveKind,
    pub value_nats: f64,
    /// Mean A_end of correct minus incorrect outcomes; feasible when ≥ 0.
    pub fc: f64,
    pub n_correct: usize,
    pub n_incorrect: usize,
    pub flags: Vec<QualityFlag>,
}

impl ObjectiveValue {
    pub fn feasible(&self) -> bool {
        self.fc >= 0.0
    }
}

fn split_classes(a_end: &[f64], outcomes: &[bool]) -> (Vec<f64>, Vec<f64>) {
    let mut correct = Vec::new();
    let mut incorrect = Vec::new();
    for (&a, &o) in a_end.iter().zip(outcomes) {
        if o {
            correct.push(a);
        } else {
            incorrect.push(a);
        }
    }
    (correct, incorrect)
}

fn check_lengths(a_end: &[f64], outcomes: &[bool]) -> Result<()> {
    if a_end.len() != outcomes.len() {
        return Err(EstimatorError::LengthMismatch(a_end.len(), outcomes.len()).into());
    }
    Ok(())
}

fn merge(mut into: Estimate, other: &Estimate) -> Estimate {
    for &f in &other.flags {
        if !into.flags.contains(&f) {
            into.flags.push(f);
        }
    }
    into
}

/// MI between `a_end` and the binary `outcomes`, in nats.
pub fn objective_mi(a_end: &[f64], outcomes: &[bool], cfg: &EstimatorConfig) -> Result<Estimate> {
    check_lengths(a_end, outcomes)?;
    let labels = outcomes.iter().map(|&o| i64::from(o)).collect();
    let set = LabeledSampleSet::new(SampleSet::from_column(a_end)?, labels)?;
    Ok(mi_mixed(&set, cfg)?)
}

/// `D(fitted|correct ‖ ref|correct) + D(fitted|incorrect ‖ ref|incorrect)`.
/// An empty class on either side yields `+∞` with [`QualityFlag::EmptyClass`].
pub fn objective_kl_prior(
    a_end: &[f64],
    outcomes: &[bool],
    reference: &ClassReference,
    cfg: &EstimatorConfig,
) -> Result<Estimate> {
    check_lengths(a_end, outcomes)?;
    let (correct, incorrect) = split_classes(a_end, outcomes);
    let n = a_end.len();
    let empty = || Ok(Estimate::new(f64::INFINITY, cfg.k, n).flagged(QualityFlag::EmptyClass));
    if correct.is_empty() || incorrect.is_empty() {
        return empty();
    }
    let (dc, di) = match reference {
        ClassReference::Samples {
            correct: rc,
            incorrect: ri,
        } => {
            if rc.is_empty() || ri.is_empty() {
                return empty();
            }
            (
                kl_knn(&SampleSet::from_column(&correct)?, &SampleSet::from_column(rc)?, cfg)?,
                kl_knn(&SampleSet::from_column(&incorrect)?, &SampleSet::from_column(ri)?, cfg)?,
            )
        }
        ClassReference::Gaussian {
            correct: gc,
            incorrect: gi,
        } => (
            kl_to_gaussian(&SampleSet::from_column(&correct)?, gc.mu, gc.sigma, cfg)?,
            kl_to_gaussian(&SampleSet::from_column(&incorrect)?, gi.mu, gi.sigma, cfg)?,
        ),
    };
    let total = Estimate::new(dc.value_nats + di.value_nats, cfg.k, n);
    Ok(merge(merge(total, &dc), &di))
}

/// `D(A|correct ‖ A|incorrect) + D(A|incorrect ‖ A|correct)`.
///
/// An empty class yields `0` with [`QualityFlag::EmptyClass`]; a class whose
/// values all coincide yields `0` with [`QualityFlag::Degenerate`], since the
/// divergence would otherwise be an unbounded reward.
pub fn objective_kl_disjoint(a_end: &[f64], outcomes: &[bool], cfg: &EstimatorConfig) -> Result<Estimate> {
    check_lengths(a_end, outcomes)?;
    let (correct, incorrect) = split_classes(a_end, outcomes);
    let n = a_end.len();
    if correct.is_empty() || incorrect.is_empty() {
        return Ok(Estimate::new(0.0, cfg.k, n).flagged(QualityFlag::EmptyClass));
    }
    let c = SampleSet::from_column(&correct)?;
    let i = SampleSet::from_column(&incorrect)?;
    if c.is_degenerate() || i.is_degenerate() {
        return Ok(Estimate::new(0.0, cfg.k, n).flagged(QualityFlag::Degenerate));
    }
    let ci = kl_knn(&c, &i, cfg)?;
    let ic = kl_knn(&i, &c, cfg)?;
    let total = Estimate::new(ci.value_nats + ic.value_nats, cfg.k, n);
    Ok(merge(merge(total, &ci), &ic))
}

/// Mean `a_end` over correct outcomes minus the mean over incorrect ones.
/// Returns `−∞` when either class is empty.
pub fn constraint_fc(a_end: &[f64], outcomes: &[bool]) -> Result<f64> {
    check_lengths(a_end, outcomes)?;
    let (correct, incorrect) = split_classes(a_end, outcomes);
    if correct.is_empty() || incorrect.is_empty() {
        return Ok(f64::NEG_INFINITY);
    }
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    Ok(mean(&correct) - mean(&incorrect))
}

/// Integrate every series' schedule under `candidate` and return the
/// end-of-task resource per series.
pub fn fitted_a_end(data: &Dataset, candidate: &CogParams, step: f64) -> Result<Vec<Vec<f64>>> {
    if data.task_count() == 0 {
        return Err(ObjectiveError::EmptyDataset);
    }
    let cfg = IntegrationConfig { step, dense: false };
    Ok(data
        .series
        .par_iter()
        .map(|s| integrate_schedule(candidate, &s.schedule, &cfg).map(|t| t.a_end))
        .collect::<std::result::Result<_, _>>()?)
}

pub fn evaluate_objective(
    spec: &ObjectiveSpec,
    data: &Dataset,
    candidate: &CogParams,
    step: f64,
) -> Result<ObjectiveValue> {
    spec.validate()?;
    let fitted = fitted_a_end(data, candidate, step)?;
    score_fitted(spec, data, &fitted)
}

/// Evaluate several objectives on one integration of the candidate.
pub fn evaluate_objectives(
    specs: &[ObjectiveSpec],
    data: &Dataset,
    candidate: &CogParams,
    step: f64,
) -> Result<Vec<ObjectiveValue>> {
    for s in specs {
        s.validate()?;
    }
    let fitted = fitted_a_end(data, candidate, step)?;
    specs.iter().map(|s| score_fitted(s, data, &fitted)).collect()
}

/// Score already-integrated end-of-task values (one vector per series).
pub fn score_fitted(spec: &ObjectiveSpec, data: &Dataset, fitted: &[Vec<f64>]) -> Result<ObjectiveValue> {
    if fitted.len() != data.series.len() {
        return Err(EstimatorError::LengthMismatch(fitted.len(), data.series.len()).into());
    }
    if spec.pool_series {
        let a_end: Vec<f64> = fitted.iter().flatten().copied().collect();
        let outcomes = data.pooled_outcomes();
        let truth = data.pooled_a_end();
        score_one(spec, &a_end, &outcomes, &truth)
    } else {
        let parts = fitted
            .iter()
            .zip(&data.series)
            .map(|(f, s)| score_one(spec, f, &s.outcomes, &s.a_end))
            .collect::<Result<Vec<_>>>()?;
        let m = parts.len() as f64;
        let mut flags = Vec::new();
        for f in parts.iter().flat_map(|p| &p.flags) {
            if !flags.contains(f) {
                flags.push(*f);
            }
        }
        Ok(ObjectiveValue {
            kind: spec.kind,
            value_nats: parts.iter().map(|p| p.value_nats).sum::<f64>() / m,
            fc: parts.iter().map(|p| p.fc).sum::<f64>() / m,
            n_correct: parts.iter().map(|p| p.n_correct).sum(),
            n_incorrect: parts.iter().map(|p| p.n_incorrect).sum(),
            flags,
        })
    }
}

fn score_one(spec: &ObjectiveSpec, a_end: &[f64], outcomes: &[bool], truth: &[f64]) -> Result<ObjectiveValue> {
    let cfg = &spec.estimator;
    let est = match spec.kind {
        ObjectiveKind::Mi => objective_mi(a_end, outcomes, cfg)?,
        ObjectiveKind::KlDisjoint => objective_kl_disjoint(a_end, outcomes, cfg)?,
        ObjectiveKind::KlPrior => {
            let reference = match spec.reference.as_ref() {
                Some(Reference::DatasetSamples) => ClassReference::from_samples(truth, outcomes),
                Some(Reference::DatasetGaussian) => ClassReference::fit_gaussian(truth, outcomes),
                Some(Reference::Samples { correct, incorrect }) => ClassReference::Samples {
                    correct: correct.clone(),
                    incorrect: incorrect.clone(),
                },
                Some(Reference::Gaussian { correct, incorrect }) => ClassReference::Gaussian {
                    correct: *correct,
                    incorrect: *incorrect,
                },
                None => return Err(ObjectiveError::InvalidSpec("kl_prior requires a reference".into())),
            };
            objective_kl_prior(a_end, outcomes, &reference, cfg)?
        }
    };
    let fc = constraint_fc(a_end, outcomes)?;
    let n_correct = outcomes.iter().filter(|&&o| o).count();
    let mut flags = est.flags;
    if fc == f64::NEG_INFINITY && !flags.contains(&QualityFlag::EmptyClass) {
        flags.push(QualityFlag::EmptyClass);
    }
    Ok(ObjectiveValue {
        kind: spec.kind,
        value_nats: est.value_nats,
        fc,
        n_correct,
        n_incorrect: outcomes.len() - n_correct,
        flags,
    })
}

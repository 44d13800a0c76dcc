//! The experiment config document.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use infofit::datagen::{OutcomeSpec, ScheduleGenConfig};
use infofit::dynamics::{CogParam, CogParams, IntegrationConfig, TimeGrid, ToyForm};
use infofit::estimators::EstimatorConfig;
use infofit::objectives::{ObjectiveKind, ObjectiveSpec, Reference};
use infofit::optimize::{default_bounds, MiEstimator, SpsaConfig};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::CliError;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub schema_version: u32,
    /// Not part of the config hash.
    pub out_dir: Option<PathBuf>,
    /// Not part of the config hash.
    pub threads: Option<usize>,
    pub model: CogParams,
    pub schedule: ScheduleGenConfig,
    pub outcome: OutcomeSpec,
    pub dataset: DatasetConfig,
    pub integration: IntegrationConfig,
    pub objective: ObjectiveSettings,
    pub toy: ToySweepConfig,
    pub sweep: SweepConfig,
    pub fit: FitConfig,
    pub fixtures: FixtureConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            out_dir: None,
            threads: None,
            model: CogParams::default(),
            schedule: ScheduleGenConfig::default(),
            outcome: OutcomeSpec::default(),
            dataset: DatasetConfig::default(),
            integration: IntegrationConfig::default(),
            objective: ObjectiveSettings::default(),
            toy: ToySweepConfig::default(),
            sweep: SweepConfig::default(),
            fit: FitConfig::default(),
            fixtures: FixtureConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DatasetConfig {
    pub n_series: usize,
    pub master_seed: u64,
}

impl Default for DatasetConfig {
    fn default() -> Self {
        Self {
            n_series: 5,
            master_seed: 1,
        }
    }
}

/// Everything in an [`ObjectiveSpec`] except the kind, which each command picks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ObjectiveSettings {
    pub estimator: EstimatorConfig,
    pub pool_series: bool,
    /// Reference for kl_prior; the dataset's own samples when absent.
    pub reference: Option<Reference>,
}

impl Default for ObjectiveSettings {
    fn default() -> Self {
        Self {
            estimator: EstimatorConfig::default(),
            pool_series: true,
            reference: None,
        }
    }
}

impl ObjectiveSettings {
    pub fn spec(&self, kind: ObjectiveKind) -> ObjectiveSpec {
        let mut spec = ObjectiveSpec::new(kind);
        spec.estimator = self.estimator;
        spec.pool_series = self.pool_series;
        if kind == ObjectiveKind::KlPrior {
            spec.reference = Some(self.reference.clone().unwrap_or(Reference::DatasetSamples));
        }
        spec
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ToyCase {
    pub lambda: f64,
    pub a: f64,
}

/// `start + i·step` for `i = 0..=round((stop − start)/step)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinearGrid {
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

impl LinearGrid {
    pub fn points(&self) -> Vec<f64> {
        let n = ((self.stop - self.start) / self.step).round() as usize;
        // Snap to 1e-9 so that e.g. 0 lands exactly on 0.
        (0..=n)
            .map(|i| ((self.start + i as f64 * self.step) * 1e9).round() / 1e9)
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ToySweepConfig {
    pub cases: Vec<ToyCase>,
    pub forms: Vec<ToyForm>,
    pub time_grid: TimeGrid,
    pub noise_std: f64,
    pub seed: u64,
    pub estimator: MiEstimator,
    pub grid: LinearGrid,
}

impl Default for ToySweepConfig {
    fn default() -> Self {
        Self {
            cases: vec![
                ToyCase { lambda: 2.0, a: 3.0 },
                ToyCase { lambda: 0.5, a: 1.0 },
                ToyCase { lambda: 1.0, a: 2.0 },
            ],
            forms: ToyForm::ALL.to_vec(),
            time_grid: TimeGrid::default(),
            noise_std: 0.0,
            seed: 0,
            estimator: MiEstimator::Lnc,
            grid: LinearGrid {
                start: -1.0,
                stop: 4.0,
                step: 0.01,
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub params: Vec<CogParam>,
    pub kinds: Vec<ObjectiveKind>,
    /// Grid points per halving; the grid spans ×[0.5, 2] of the generating value.
    pub steps: usize,
    pub parallel: bool,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            params: vec![CogParam::KW, CogParam::KR, CogParam::KB, CogParam::BMax, CogParam::Rho],
            kinds: ObjectiveKind::ALL.to_vec(),
            steps: 6,
            parallel: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FitConfig {
    pub params: Vec<CogParam>,
    pub kind: ObjectiveKind,
    /// Positive parameters start at this multiple of the generating value;
    /// ρ starts at its generating value.
    pub start_factor: f64,
    /// Natural-unit search box per parameter; missing entries use the defaults.
    pub bounds: BTreeMap<CogParam, (f64, f64)>,
    /// `bounds` inside is ignored; it is derived from the box above.
    pub spsa: SpsaConfig,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            params: vec![CogParam::KW, CogParam::KR, CogParam::KB, CogParam::BMax, CogParam::Rho],
            kind: ObjectiveKind::Mi,
            start_factor: 2.0,
            bounds: BTreeMap::new(),
            spsa: SpsaConfig::default(),
        }
    }
}

impl FitConfig {
    pub fn natural_bounds(&self) -> Vec<(f64, f64)> {
        self.params
            .iter()
            .map(|p| self.bounds.get(p).copied().unwrap_or_else(|| default_bounds(*p)))
            .collect()
    }

    /// The perturbed starting point around `truth`.
    pub fn start(&self, truth: &CogParams) -> CogParams {
        let mut p = *truth;
        for &q in &self.params {
            if q.is_positive() {
                p.set(q, truth.get(q) * self.start_factor);
            }
        }
        p
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FixtureConfig {
    pub seed: u64,
    pub n: usize,
}

impl Default for FixtureConfig {
    fn default() -> Self {
        Self { seed: 0, n: 2000 }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        Ok(cfg)
    }

    /// Checks everything that can be checked before any compute.
    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |m: String| Err(CliError::Config(m));
        if self.schema_version != SCHEMA_VERSION {
            return bad(format!(
                "unsupported schema_version {} (expected {SCHEMA_VERSION})",
                self.schema_version
            ));
        }
        if self.threads == Some(0) {
            return bad("threads must be >= 1".into());
        }
        self.model.validate().map_err(cfg_err)?;
        self.schedule.validate().map_err(cfg_err)?;
        match self.outcome {
            OutcomeSpec::Fixed { alpha, a_ref } => {
                infofit::datagen::OutcomeModel { alpha, a_ref }.validate().map_err(cfg_err)?
            }
            OutcomeSpec::Calibrate { p_high, q_high } => {
                if !(0.5 < p_high && p_high < 1.0 && 0.5 < q_high && q_high < 1.0) {
                    return bad("outcome p_high and q_high must lie in (0.5, 1)".into());
                }
            }
        }
        if self.dataset.n_series == 0 {
            return bad("dataset.n_series must be >= 1".into());
        }
        if !(self.integration.step > 0.0 && self.integration.step.is_finite()) {
            return bad(format!("integration.step must be > 0, got {}", self.integration.step));
        }
        for kind in ObjectiveKind::ALL {
            self.objective.spec(kind).validate().map_err(cfg_err)?;
        }

        let toy = &self.toy;
        if toy.cases.is_empty() || toy.forms.is_empty() {
            return bad("toy.cases and toy.forms must be non-empty".into());
        }
        if !(toy.grid.step > 0.0 && toy.grid.stop >= toy.grid.start) {
            return bad("toy.grid needs step > 0 and stop >= start".into());
        }
        if toy.time_grid.n < 2 || !(toy.time_grid.t_max > toy.time_grid.t_min) {
            return bad("toy.time_grid needs n >= 2 and t_max > t_min".into());
        }
        if !(toy.noise_std >= 0.0 && toy.noise_std.is_finite()) {
            return bad("toy.noise_std must be finite and >= 0".into());
        }

        if self.sweep.steps == 0 || self.sweep.params.is_empty() || self.sweep.kinds.is_empty() {
            return bad("sweep needs steps >= 1 and non-empty params and kinds".into());
        }

        let fit = &self.fit;
        if fit.params.is_empty() {
            return bad("fit.params must be non-empty".into());
        }
        if !(fit.start_factor > 0.0 && fit.start_factor.is_finite()) {
            return bad("fit.start_factor must be > 0".into());
        }
        let start = fit.start(&self.model);
        start.validate().map_err(cfg_err)?;
        for (&q, &(lo, hi)) in fit.params.iter().zip(&fit.natural_bounds()) {
            if !(lo < hi) || (q.is_positive() && !(lo > 0.0)) {
                return bad(format!("fit bounds for {q} are invalid: [{lo}, {hi}]"));
            }
            let v = start.get(q);
            if !(lo <= v && v <= hi) {
                return bad(format!("fit start {q}={v} lies outside [{lo}, {hi}]"));
            }
        }
        let mut spsa = fit.spsa.clone();
        spsa.bounds = vec![(f64::NEG_INFINITY, f64::INFINITY); fit.params.len()];
        spsa.validate(fit.params.len()).map_err(CliError::Config)?;

        if self.fixtures.n < 10 {
            return bad("fixtures.n must be >= 10".into());
        }
        Ok(())
    }

    /// SHA-256 of the canonical JSON form, excluding output location and
    /// thread count so that they cannot change file contents.
    pub fn hash(&self) -> String {
        let canon = RunConfig {
            out_dir: None,
            threads: None,
            ..self.clone()
        };
        let json = serde_json::to_string(&canon).expect("config serialises");
        Sha256::digest(json.as_bytes())
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }
}

fn cfg_err(e: impl std::fmt::Display) -> CliError {
    CliError::Config(e.to_string())
}

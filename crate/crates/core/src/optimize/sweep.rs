//! One-parameter-at-a-time objective landscapes.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{OptimizeError, Result};
use crate::datagen::Dataset;
use crate::dynamics::{toy_candidate, toy_generate, CogParam, CogParams, ToyConfig};
use crate::estimators::{mi_ksg, mi_lnc, EstimatorConfig, QualityFlag, SampleSet};
use crate::objectives::{evaluate_objective, Direction, ObjectiveKind, ObjectiveSpec};

/// MI estimator used for the toy sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MiEstimator {
    Ksg,
    #[default]
    Lnc,
}

#[derive(Debug, Clone, PartialEq)]
pub enum SweepTarget {
    /// Vary the candidate decay rate λ̂ against a generated toy series.
    Toy { config: ToyConfig, estimator: MiEstimator },
    /// Vary one model parameter, holding the rest at `base`.
    Cognitive { base: CogParams, param: CogParam },
}

impl SweepTarget {
    pub fn param_name(&self) -> &'static str {
        match self {
            SweepTarget::Toy { .. } => "lambda_hat",
            SweepTarget::Cognitive { param, .. } => param.name(),
        }
    }

    /// The value that generated the data, drawn as a reference line.
    pub fn generating_value(&self) -> f64 {
        match self {
            SweepTarget::Toy { config, .. } => config.lambda_true,
            SweepTarget::Cognitive { base, param } => base.get(*param),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub target: SweepTarget,
    pub grid: Vec<f64>,
    pub objective: ObjectiveSpec,
    pub parallel: bool,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        if self.grid.is_empty() {
            return Err(OptimizeError::InvalidConfig("sweep grid is empty".into()));
        }
        if self.grid.iter().any(|v| !v.is_finite()) || self.grid.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(OptimizeError::InvalidConfig("sweep grid must be finite and strictly increasing".into()));
        }
        if matches!(self.target, SweepTarget::Toy { .. }) && self.objective.kind != ObjectiveKind::Mi {
            return Err(OptimizeError::InvalidConfig("toy sweeps support only the mi objective".into()));
        }
        self.objective.validate()?;
        Ok(())
    }
}

/// `(i − 100)/100` for `i = 0..=500`: −1 to 4 in steps of 0.01, with 0 exact.
pub fn toy_lambda_grid() -> Vec<f64> {
    (0..=500).map(|i| (i as f64 - 100.0) / 100.0).collect()
}

/// `center · 2^((i − steps)/steps)` for `i = 0..=2·steps`, i.e. ×[0.5, 2].
pub fn multiplicative_grid(center: f64, steps: usize) -> Vec<f64> {
    let s = steps as f64;
    (0..=2 * steps)
        .map(|i| center * 2f64.powf((i as f64 - s) / s))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepPoint {
    pub param_value: f64,
    /// NaN when the evaluation failed.
    pub objective_nats: f64,
    /// NaN when not applicable or the evaluation failed.
    pub fc: f64,
    pub error: Option<String>,
    pub flags: Vec<QualityFlag>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepCurve {
    pub param: String,
    pub kind: ObjectiveKind,
    pub direction: Direction,
    pub generating_value: f64,
    pub points: Vec<SweepPoint>,
}

impl SweepCurve {
    pub fn grid(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.param_value).collect()
    }

    pub fn values(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.objective_nats).collect()
    }

    /// Index of the best successfully evaluated point; ties go to the first.
    pub fn argopt_index(&self) -> Option<usize> {
        let mut best: Option<usize> = None;
        for (i, p) in self.points.iter().enumerate() {
            if p.error.is_some() || p.objective_nats.is_nan() {
                continue;
            }
            match best {
                Some(b) if !self.direction.is_better(p.objective_nats, self.points[b].objective_nats) => {}
                _ => best = Some(i),
            }
        }
        best
    }

    pub fn argopt(&self) -> Option<f64> {
        self.argopt_index().map(|i| self.points[i].param_value)
    }

    /// CSV with one `#` comment line per entry of `comments`, a header, and
    /// one row per grid point.
    pub fn to_csv(&self, comments: &[String]) -> String {
        let mut out = String::new();
        for c in comments {
            out.push_str("# ");
            out.push_str(c);
            out.push('\n');
        }
        out.push_str("param_value,objective_nats,fc,error_flag\n");
        for p in &self.points {
            let num = |v: f64| if v.is_nan() { String::new() } else { format!("{v}") };
            let err = p.error.as_deref().unwrap_or("").replace([',', '\n', '"'], " ");
            out.push_str(&format!(
                "{},{},{},{}\n",
                p.param_value,
                num(p.objective_nats),
                num(p.fc),
                err
            ));
        }
        out
    }
}

/// Evaluate the objective at every grid point. A failing point is recorded
/// with its error and does not stop the sweep. `data` is required for
/// cognitive targets and ignored for toy targets.
pub fn run_sweep(spec: &SweepSpec, data: Option<&Dataset>, step: f64) -> Result<SweepCurve> {
    spec.validate()?;
    let eval: Box<dyn Fn(f64) -> SweepPoint + Sync + '_> = match &spec.target {
        SweepTarget::Toy { config, estimator } => {
            let series = toy_generate(config)?;
            let z = SampleSet::from_column(&series.z)?;
            let t = config.t_grid.clone();
            let cfg = spec.objective.estimator;
            let est = *estimator;
            Box::new(move |lambda| toy_point(lambda, &t, &z, est, &cfg))
        }
        SweepTarget::Cognitive { base, param } => {
            let data = data.ok_or_else(|| {
                OptimizeError::InvalidConfig("cognitive sweeps need a dataset".into())
            })?;
            let (base, param) = (*base, *param);
            Box::new(move |v| {
                let cand = base.with(param, v);
                match evaluate_objective(&spec.objective, data, &cand, step) {
                    Ok(o) => SweepPoint {
                        param_value: v,
                        objective_nats: o.value_nats,
                        fc: o.fc,
                        error: None,
                        flags: o.flags,
                    },
                    Err(e) => failed(v, e.to_string()),
                }
            })
        }
    };
    let points: Vec<SweepPoint> = if spec.parallel {
        spec.grid.par_iter().map(|&v| eval(v)).collect()
    } else {
        spec.grid.iter().map(|&v| eval(v)).collect()
    };
    Ok(SweepCurve {
        param: spec.target.param_name().to_string(),
        kind: spec.objective.kind,
        direction: spec.objective.direction(),
        generating_value: spec.target.generating_value(),
        points,
    })
}

fn failed(v: f64, reason: String) -> SweepPoint {
    SweepPoint {
        param_value: v,
        objective_nats: f64::NAN,
        fc: f64::NAN,
        error: Some(reason),
        flags: Vec::new(),
    }
}

fn toy_point(lambda: f64, t: &[f64], z: &SampleSet, est: MiEstimator, cfg: &EstimatorConfig) -> SweepPoint {
    let cand = toy_candidate(lambda, t);
    let result = SampleSet::from_column(&cand).and_then(|x| match est {
        MiEstimator::Ksg => mi_ksg(&x, z, cfg),
        MiEstimator::Lnc => mi_lnc(&x, z, cfg),
    });
    match result {
        Ok(e) => SweepPoint {
            param_value: lambda,
            objective_nats: e.value_nats,
            fc: f64::NAN,
            error: None,
            flags: e.flags,
        },
        Err(e) => failed(lambda, e.to_string()),
    }
}

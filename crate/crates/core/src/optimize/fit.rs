//! Joint SPSA fit of model parameters against a dataset.

use serde::{Deserialize, Serialize};

use super::spsa::{spsa_minimize, Evaluation, SpsaConfig, SpsaError, SpsaRecord, SpsaResult};
use super::{OptimizeError, Result};
use crate::datagen::Dataset;
use crate::dynamics::{CogParam, CogParams};
use crate::objectives::{evaluate_objective, Direction, ObjectiveError, ObjectiveSpec};

/// Default search box for each parameter, in natural units.
pub fn default_bounds(p: CogParam) -> (f64, f64) {
    match p {
        CogParam::KW | CogParam::KR | CogParam::KB => (1e-3, 10.0),
        CogParam::HalfSatA | CogParam::HalfSatB => (1e-3, 10.0),
        CogParam::BMax => (0.05, 20.0),
        CogParam::Rho => (0.0, 0.95),
    }
}

/// Strictly positive parameters are searched on `ln(value)`; ρ on its raw value.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamSpace {
    pub params: Vec<CogParam>,
    pub base: CogParams,
}

impl ParamSpace {
    pub fn new(params: Vec<CogParam>, base: CogParams) -> Self {
        Self { params, base }
    }

    pub fn names(&self) -> Vec<String> {
        self.params.iter().map(|p| p.name().to_string()).collect()
    }

    pub fn encode(&self, p: &CogParams) -> Vec<f64> {
        self.params
            .iter()
            .map(|&q| if q.is_positive() { p.get(q).ln() } else { p.get(q) })
            .collect()
    }

    pub fn decode(&self, x: &[f64]) -> CogParams {
        let mut p = self.base;
        for (&q, &v) in self.params.iter().zip(x) {
            p.set(q, if q.is_positive() { v.exp() } else { v });
        }
        p
    }

    /// Natural-unit bounds mapped into the search space.
    pub fn bounds(&self, natural: &[(f64, f64)]) -> Vec<(f64, f64)> {
        self.params
            .iter()
            .zip(natural)
            .map(|(&q, &(lo, hi))| if q.is_positive() { (lo.ln(), hi.ln()) } else { (lo, hi) })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitOutcome {
    pub initial: CogParams,
    pub fitted: CogParams,
    /// Objective and constraint evaluated exactly at `initial`.
    pub initial_objective: f64,
    pub initial_fc: f64,
    /// Objective and constraint evaluated exactly at `fitted`.
    pub objective: f64,
    pub fc: f64,
    pub feasible: bool,
    /// False when the start beat every SPSA iterate and was kept.
    pub moved: bool,
    pub iterations: usize,
}

#[derive(Debug)]
pub struct FitRun {
    pub outcome: FitOutcome,
    pub history: Vec<SpsaRecord>,
    /// History rows decoded to natural units.
    pub history_natural: Vec<Vec<f64>>,
}

/// Fit `space.params` starting from `initial` by SPSA on the objective in
/// `spec`, penalising negative class-mean ordering. `natural_bounds` gives
/// one `[lo, hi]` per fitted parameter in natural units; `cfg.bounds` is
/// overwritten with their search-space image.
///
/// SPSA judges iterates by the mean of two perturbed evaluations. The start
/// and the best-seen iterate are then evaluated exactly and the better one
/// is returned, so a fit never reports a point worse than where it began.
pub fn fit_parameters(
    spec: &ObjectiveSpec,
    data: &Dataset,
    space: &ParamSpace,
    initial: &CogParams,
    natural_bounds: &[(f64, f64)],
    cfg: &SpsaConfig,
    step: f64,
) -> Result<FitRun> {
    spec.validate()?;
    if natural_bounds.len() != space.params.len() {
        return Err(OptimizeError::InvalidConfig("one bound per fitted parameter is required".into()));
    }
    for (&q, &(lo, hi)) in space.params.iter().zip(natural_bounds) {
        if q.is_positive() && !(lo > 0.0) {
            return Err(OptimizeError::InvalidConfig(format!("lower bound of {q} must be > 0")));
        }
        let v = initial.get(q);
        if !(lo <= v && v <= hi) {
            return Err(OptimizeError::InvalidConfig(format!("initial {q}={v} outside [{lo}, {hi}]")));
        }
    }
    let space = ParamSpace::new(space.params.clone(), *initial);
    let cfg = SpsaConfig {
        bounds: space.bounds(natural_bounds),
        ..cfg.clone()
    };
    let x0 = space.encode(initial);
    let eval = |x: &[f64]| -> std::result::Result<Evaluation, ObjectiveError> {
        let o = evaluate_objective(spec, data, &space.decode(x), step)?;
        Ok(Evaluation {
            objective: o.value_nats,
            fc: o.fc,
        })
    };
    let SpsaResult { x_best, history, .. } = match spsa_minimize(eval, spec.direction(), &x0, &cfg) {
        Ok(r) => r,
        Err(SpsaError::InvalidConfig(m)) => return Err(OptimizeError::InvalidConfig(m)),
        Err(SpsaError::Aborted {
            iteration,
            error,
            history,
        }) => {
            return Err(OptimizeError::FitAborted {
                iteration,
                reason: error.to_string(),
                history,
            })
        }
    };
    let start = evaluate_objective(spec, data, initial, step)?;
    let candidate = space.decode(&x_best);
    let end = evaluate_objective(spec, data, &candidate, step)?;
    let moved = prefer(spec.direction(), (end.value_nats, end.fc), (start.value_nats, start.fc));
    let (fitted, chosen) = if moved { (candidate, &end) } else { (*initial, &start) };
    let history_natural = history
        .iter()
        .map(|r| {
            let p = space.decode(&r.x);
            space.params.iter().map(|&q| p.get(q)).collect()
        })
        .collect();
    Ok(FitRun {
        outcome: FitOutcome {
            initial: *initial,
            fitted,
            initial_objective: start.value_nats,
            initial_fc: start.fc,
            objective: chosen.value_nats,
            fc: chosen.fc,
            feasible: chosen.fc >= 0.0,
            moved,
            iterations: cfg.iterations,
        },
        history,
        history_natural,
    })
}

/// Whether `(value, fc)` `a` should replace `b`: feasible beats infeasible,
/// two feasible points compare by value, two infeasible ones by violation.
fn prefer(direction: Direction, a: (f64, f64), b: (f64, f64)) -> bool {
    match (a.1 >= 0.0, b.1 >= 0.0) {
        (true, false) => true,
        (false, true) => false,
        (true, true) => direction.is_better(a.0, b.0),
        (false, false) => a.1 > b.1,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn encode_decode_round_trip() {
        let space = ParamSpace::new(vec![CogParam::KW, CogParam::Rho, CogParam::BMax], CogParams::default());
        let p = CogParams::default();
        let x = space.encode(&p);
        assert!((x[0] - 0.2f64.ln()).abs() < 1e-15);
        assert_eq!(x[1], 0.5);
        let back = space.decode(&x);
        assert!((back.k_w - p.k_w).abs() < 1e-15);
        assert_eq!(back.rho, p.rho);
        assert!((back.b_max - 1.0).abs() < 1e-15);
        let b = space.bounds(&[(0.01, 1.0), (0.0, 0.9), (0.1, 10.0)]);
        assert_eq!(b[1], (0.0, 0.9));
        assert!((b[0].0 - 0.01f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn preference_order() {
        let max = Direction::Maximize;
        assert!(prefer(max, (0.1, 0.0), (0.2, -0.1)));
        assert!(!prefer(max, (0.3, -0.1), (0.2, 0.1)));
        assert!(prefer(max, (0.3, 0.1), (0.2, 0.1)));
        assert!(!prefer(max, (0.2, 0.1), (0.2, 0.1)));
        assert!(prefer(max, (0.0, -0.1), (0.5, -0.2)));
        assert!(prefer(Direction::Minimize, (0.1, 0.0), (0.2, 0.0)));
    }

    #[test]
    fn default_bounds_contain_defaults() {
        let p = CogParams::default();
        for q in CogParam::ALL {
            let (lo, hi) = default_bounds(q);
            assert!(lo <= p.get(q) && p.get(q) <= hi, "{q}");
        }
    }
}

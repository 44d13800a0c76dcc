//! Simultaneous perturbation stochastic approximation with a quadratic
//! penalty for the class-mean ordering constraint.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::objectives::Direction;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpsaConfig {
    pub a: f64,
    pub c: f64,
    /// Stability constant; `None` means `0.1 · iterations`.
    pub a_stab: Option<f64>,
    pub alpha_gain: f64,
    pub gamma_gain: f64,
    pub iterations: usize,
    pub penalty_weight: f64,
    pub seed: u64,
    /// Per-coordinate `[lo, hi]`; iterates are projected onto this box.
    pub bounds: Vec<(f64, f64)>,
}

impl Default for SpsaConfig {
    fn default() -> Self {
        Self {
            a: 0.1,
            c: 0.05,
            a_stab: None,
            alpha_gain: 0.602,
            gamma_gain: 0.101,
            iterations: 100,
            penalty_weight: 10.0,
            seed: 0,
            bounds: Vec::new(),
        }
    }
}

impl SpsaConfig {
    pub fn validate(&self, dim: usize) -> Result<(), String> {
        let bad = |m: String| Err(m);
        if !(self.a > 0.0 && self.c > 0.0) {
            return bad(format!("gains a and c must be > 0, got {} and {}", self.a, self.c));
        }
        if !(0.0 < self.gamma_gain && self.gamma_gain < self.alpha_gain && self.alpha_gain <= 1.0) {
            return bad(format!(
                "need 0 < gamma_gain < alpha_gain <= 1, got {} and {}",
                self.gamma_gain, self.alpha_gain
            ));
        }
        if !(self.penalty_weight >= 0.0) {
            return bad(format!("penalty_weight must be >= 0, got {}", self.penalty_weight));
        }
        if matches!(self.a_stab, Some(v) if !(v >= 0.0)) {
            return bad("a_stab must be >= 0".into());
        }
        if self.bounds.len() != dim {
            return bad(format!("expected {dim} bounds, got {}", self.bounds.len()));
        }
        if self.bounds.iter().any(|&(lo, hi)| !(lo <= hi)) {
            return bad("every bound needs lo <= hi".into());
        }
        Ok(())
    }

    pub fn stability(&self) -> f64 {
        self.a_stab.unwrap_or(0.1 * self.iterations as f64)
    }

    /// Step gain `a_k` at zero-based iteration `k`.
    pub fn a_k(&self, k: usize) -> f64 {
        self.a / (self.stability() + k as f64 + 1.0).powf(self.alpha_gain)
    }

    /// Perturbation size `c_k` at zero-based iteration `k`.
    pub fn c_k(&self, k: usize) -> f64 {
        self.c / (k as f64 + 1.0).powf(self.gamma_gain)
    }

    fn project(&self, x: &mut [f64]) {
        for (v, &(lo, hi)) in x.iter_mut().zip(&self.bounds) {
            *v = v.clamp(lo, hi);
        }
    }
}

/// One call of the objective.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Evaluation {
    pub objective: f64,
    /// Constraint value; feasible when `>= 0`.
    pub fc: f64,
}

impl Evaluation {
    pub fn unconstrained(objective: f64) -> Self {
        Self { objective, fc: 0.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpsaRecord {
    pub iteration: usize,
    /// Iterate around which the two evaluations were taken.
    pub x: Vec<f64>,
    /// Mean objective of the two perturbed evaluations, in the objective's own direction.
    pub objective: f64,
    /// Mean constraint of the two perturbed evaluations.
    pub fc: f64,
    pub feasible: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpsaResult {
    pub x_best: Vec<f64>,
    /// Index into `history` of `x_best`, `None` when no iteration ran.
    pub best_iteration: Option<usize>,
    pub history: Vec<SpsaRecord>,
}

#[derive(Debug)]
pub enum SpsaError<E> {
    InvalidConfig(String),
    /// An evaluation failed; `history` holds every completed iteration.
    Aborted {
        iteration: usize,
        error: E,
        history: Vec<SpsaRecord>,
    },
}

impl<E: std::fmt::Display> std::fmt::Display for SpsaError<E> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SpsaError::InvalidConfig(m) => write!(f, "invalid SPSA config: {m}"),
            SpsaError::Aborted { iteration, error, .. } => {
                write!(f, "evaluation failed at iteration {iteration}: {error}")
            }
        }
    }
}

impl<E: std::fmt::Debug + std::fmt::Display> std::error::Error for SpsaError<E> {}

/// Minimise `direction.to_loss(objective) + w·max(0, −fc)²` over the box.
///
/// Each iteration draws a Rademacher perturbation Δ, evaluates the two
/// points `x ± c_k·Δ` (clamped to the bounds, concurrently) and steps
/// `x ← proj(x − a_k·ĝ)` with `ĝ_i = (L⁺ − L⁻)/(2 c_k Δ_i)`. Exactly two
/// evaluations are made per iteration.
///
/// The returned iterate is the best one seen, judged by the mean unpenalised
/// objective of its two evaluations among feasible iterates, or by the
/// smallest mean violation when none was feasible.
pub fn spsa_minimize<F, E>(
    eval: F,
    direction: Direction,
    x0: &[f64],
    cfg: &SpsaConfig,
) -> Result<SpsaResult, SpsaError<E>>
where
    F: Fn(&[f64]) -> Result<Evaluation, E> + Sync,
    E: Send,
{
    let dim = x0.len();
    cfg.validate(dim).map_err(SpsaError::InvalidConfig)?;
    if x0.iter().zip(&cfg.bounds).any(|(v, &(lo, hi))| !(lo <= *v && *v <= hi)) {
        return Err(SpsaError::InvalidConfig("x0 lies outside the bounds".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut x = x0.to_vec();
    let mut history: Vec<SpsaRecord> = Vec::with_capacity(cfg.iterations);
    let loss = |e: &Evaluation| direction.to_loss(e.objective) + cfg.penalty_weight * (-e.fc).max(0.0).powi(2);

    for k in 0..cfg.iterations {
        let ck = cfg.c_k(k);
        let delta: Vec<f64> = (0..dim).map(|_| rademacher(&mut rng)).collect();
        let mut plus: Vec<f64> = x.iter().zip(&delta).map(|(v, d)| v + ck * d).collect();
        let mut minus: Vec<f64> = x.iter().zip(&delta).map(|(v, d)| v - ck * d).collect();
        cfg.project(&mut plus);
        cfg.project(&mut minus);
        let (ep, em) = rayon::join(|| eval(&plus), || eval(&minus));
        let (ep, em) = match (ep, em) {
            (Ok(p), Ok(m)) => (p, m),
            (Err(error), _) | (_, Err(error)) => {
                return Err(SpsaError::Aborted {
                    iteration: k,
                    error,
                    history,
                })
            }
        };
        let fc = 0.5 * (ep.fc + em.fc);
        history.push(SpsaRecord {
            iteration: k,
            x: x.clone(),
            objective: 0.5 * (ep.objective + em.objective),
            fc,
            feasible: fc >= 0.0,
        });
        let diff = loss(&ep) - loss(&em);
        let ak = cfg.a_k(k);
        for (v, d) in x.iter_mut().zip(&delta) {
            *v -= ak * diff / (2.0 * ck * d);
        }
        cfg.project(&mut x);
    }

    let best = best_record(&history, direction);
    Ok(SpsaResult {
        x_best: best.map_or_else(|| x0.to_vec(), |i| history[i].x.clone()),
        best_iteration: best,
        history,
    })
}

fn rademacher(rng: &mut ChaCha8Rng) -> f64 {
    if rng.random::<bool>() {
        1.0
    } else {
        -1.0
    }
}

fn best_record(history: &[SpsaRecord], direction: Direction) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, r) in history.iter().enumerate().filter(|(_, r)| r.feasible && !r.objective.is_nan()) {
        match best {
            Some(b) if !direction.is_better(r.objective, history[b].objective) => {}
            _ => best = Some(i),
        }
    }
    best.or_else(|| {
        history
            .iter()
            .enumerate()
            .filter(|(_, r)| !r.fc.is_nan())
            .min_by(|(_, a), (_, b)| (-a.fc).total_cmp(&-b.fc))
            .map(|(i, _)| i)
    })
}

/// SPSA history as CSV: `iteration, <names...>, objective, fc, feasible`.
pub fn history_csv(history: &[SpsaRecord], names: &[String], comments: &[String]) -> String {
    let mut out = String::new();
    for c in comments {
        out.push_str(&format!("# {c}\n"));
    }
    out.push_str("iteration,");
    for n in names {
        out.push_str(n);
        out.push(',');
    }
    out.push_str("objective,fc,feasible\n");
    for r in history {
        out.push_str(&format!("{},", r.iteration));
        for v in &r.x {
            out.push_str(&format!("{v},"));
        }
        out.push_str(&format!("{},{},{}\n", r.objective, r.fc, r.feasible));
    }
    out
}

//! The toy family `x = e^{−λt}`, `y = x + noise`, `z = f(y)`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::{DynamicsError, Result};

/// Observation-layer transform.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ToyForm {
    /// `a·y`
    Linear,
    /// `exp(a·y)`
    Exponential,
    /// `sin(a·y)`
    Sinusoidal,
}

impl ToyForm {
    pub const ALL: [ToyForm; 3] = [ToyForm::Linear, ToyForm::Exponential, ToyForm::Sinusoidal];

    #[inline]
    pub fn apply(self, a: f64, y: f64) -> f64 {
        match self {
            ToyForm::Linear => a * y,
            ToyForm::Exponential => (a * y).exp(),
            ToyForm::Sinusoidal => (a * y).sin(),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ToyForm::Linear => "linear",
            ToyForm::Exponential => "exponential",
            ToyForm::Sinusoidal => "sinusoidal",
        }
    }
}

/// Evenly spaced time samples over `[t_min, t_max]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeGrid {
    pub t_min: f64,
    pub t_max: f64,
    pub n: usize,
}

impl Default for TimeGrid {
    fn default() -> Self {
        Self {
            t_min: 0.0,
            t_max: 5.0,
            n: 1000,
        }
    }
}

impl TimeGrid {
    pub fn points(&self) -> Vec<f64> {
        let span = self.t_max - self.t_min;
        let last = self.n.saturating_sub(1).max(1) as f64;
        (0..self.n)
            .map(|i| self.t_min + span * i as f64 / last)
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ToyConfig {
    pub lambda_true: f64,
    pub a: f64,
    pub form: ToyForm,
    pub t_grid: Vec<f64>,
    pub noise_std: f64,
    pub seed: u64,
}

impl ToyConfig {
    pub fn validate(&self) -> Result<()> {
        if self.t_grid.len() < 2 {
            return Err(DynamicsError::InvalidToyConfig("t_grid needs at least 2 points".into()));
        }
        if self.t_grid.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(DynamicsError::InvalidToyConfig("t_grid must be strictly increasing".into()));
        }
        if !(self.noise_std >= 0.0 && self.noise_std.is_finite()) {
            return Err(DynamicsError::InvalidToyConfig(format!(
                "noise_std must be finite and >= 0, got {}",
                self.noise_std
            )));
        }
        if !self.lambda_true.is_finite() || !self.a.is_finite() {
            return Err(DynamicsError::InvalidToyConfig("lambda_true and a must be finite".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ToySeries {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub z: Vec<f64>,
}

pub fn toy_generate(cfg: &ToyConfig) -> Result<ToySeries> {
    cfg.validate()?;
    let x = toy_candidate(cfg.lambda_true, &cfg.t_grid);
    let y = if cfg.noise_std == 0.0 {
        x.clone()
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let noise = Normal::new(0.0, cfg.noise_std)
            .map_err(|e| DynamicsError::InvalidToyConfig(e.to_string()))?;
        x.iter().map(|&xi| xi + noise.sample(&mut rng)).collect()
    };
    let z = y.iter().map(|&yi| cfg.form.apply(cfg.a, yi)).collect();
    Ok(ToySeries { x, y, z })
}

/// Candidate hidden series `exp(−λ̂·t)` over the time grid.
pub fn toy_candidate(lambda_hat: f64, t_grid: &[f64]) -> Vec<f64> {
    t_grid.iter().map(|&t| (-lambda_hat * t).exp()).collect()
}

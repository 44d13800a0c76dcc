//! Nonparametric k-nearest-neighbour estimators of differential entropy,
//! mutual information and KL divergence.
//!
//! All estimators work in nats internally and use the Chebyshev metric.
//! Before any neighbour search, inputs receive a tiny seeded jitter
//! (see [`jitter`]) so that exactly repeated coordinates do not produce
//! zero distances.

mod entropy;
mod kl;
pub mod knn;
mod mi;

use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use thiserror::Error;

use crate::seed;

pub use entropy::entropy_knn;
pub use kl::{kl_knn, kl_to_gaussian};
pub use mi::{mi_ksg, mi_lnc, mi_mixed};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EstimatorError {
    #[error("too few samples: need more than k={k}, got n={n}")]
    TooFewSamples { n: usize, k: usize },
    #[error("sample length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("sigma must be positive, got {0}")]
    NonPositiveSigma(f64),
    #[error("invalid sample set: {0}")]
    InvalidSamples(String),
    #[error("invalid estimator config: {0}")]
    InvalidConfig(String),
}

pub type Result<T> = std::result::Result<T, EstimatorError>;

/// N points in d-dimensional real space, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleSet {
    points: Vec<f64>,
    n: usize,
    d: usize,
}

impl SampleSet {
    pub fn new(points: Vec<f64>, d: usize) -> Result<Self> {
        if d == 0 {
            return Err(EstimatorError::InvalidSamples("dimension must be >= 1".into()));
        }
        if points.is_empty() || !points.len().is_multiple_of(d) {
            return Err(EstimatorError::InvalidSamples(format!(
                "{} values do not form rows of dimension {d}",
                points.len()
            )));
        }
        if let Some(v) = points.iter().find(|v| !v.is_finite()) {
            return Err(EstimatorError::InvalidSamples(format!("non-finite value {v}")));
        }
        let n = points.len() / d;
        Ok(Self { points, n, d })
    }

    /// One-dimensional sample set.
    pub fn from_column(values: &[f64]) -> Result<Self> {
        Self::new(values.to_vec(), 1)
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let d = rows.first().map_or(0, |r| r.as_ref().len());
        if rows.iter().any(|r| r.as_ref().len() != d) {
            return Err(EstimatorError::InvalidSamples("ragged rows".into()));
        }
        Self::new(rows.iter().flat_map(|r| r.as_ref().iter().copied()).collect(), d)
    }

    /// Build from equal-length columns.
    pub fn from_columns<C: AsRef<[f64]>>(cols: &[C]) -> Result<Self> {
        let n = cols.first().map_or(0, |c| c.as_ref().len());
        if cols.iter().any(|c| c.as_ref().len() != n) {
            return Err(EstimatorError::InvalidSamples("columns differ in length".into()));
        }
        let d = cols.len();
        let mut points = Vec::with_capacity(n * d);
        for i in 0..n {
            points.extend(cols.iter().map(|c| c.as_ref()[i]));
        }
        Self::new(points, d)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.points[i * self.d..(i + 1) * self.d]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.points
    }

    /// True when every point coincides with the first.
    pub fn is_degenerate(&self) -> bool {
        let first = self.point(0);
        (1..self.n).all(|i| self.point(i) == first)
    }

    /// Concatenate coordinates of two sets with the same number of points.
    pub fn join(&self, other: &SampleSet) -> Result<SampleSet> {
        if self.n != other.n {
            return Err(EstimatorError::LengthMismatch(self.n, other.n));
        }
        let d = self.d + other.d;
        let mut points = Vec::with_capacity(self.n * d);
        for i in 0..self.n {
            points.extend_from_slice(self.point(i));
            points.extend_from_slice(other.point(i));
        }
        Ok(SampleSet { points, n: self.n, d })
    }

    /// Rows selected by `keep`.
    pub fn select(&self, keep: impl Fn(usize) -> bool) -> Option<SampleSet> {
        let points: Vec<f64> = (0..self.n)
            .filter(|&i| keep(i))
            .flat_map(|i| self.point(i).iter().copied())
            .collect();
        if points.is_empty() {
            return None;
        }
        let n = points.len() / self.d;
        Some(SampleSet { points, n, d: self.d })
    }
}

/// Continuous values paired with discrete category codes.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledSampleSet {
    pub values: SampleSet,
    pub labels: Vec<i64>,
}

impl LabeledSampleSet {
    pub fn new(values: SampleSet, labels: Vec<i64>) -> Result<Self> {
        if values.n() != labels.len() {
            return Err(EstimatorError::LengthMismatch(values.n(), labels.len()));
        }
        Ok(Self { values, labels })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Units {
    #[default]
    Nats,
    Bits,
}

impl Units {
    pub fn from_nats(self, v: f64) -> f64 {
        match self {
            Units::Nats => v,
            Units::Bits => v / std::f64::consts::LN_2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EstimatorConfig {
    /// Neighbour count.
    pub k: usize,
    /// Local non-uniformity threshold.
    pub lnc_alpha: f64,
    /// Jitter amplitude relative to each coordinate's range.
    pub jitter_scale: f64,
    pub units: Units,
    /// Seed of the tie-breaking jitter.
    pub seed: u64,
}

impl Default for EstimatorConfig {
    fn default() -> Self {
        Self {
            k: 3,
            lnc_alpha: 0.25,
            jitter_scale: 1e-10,
            units: Units::Nats,
            seed: 0,
        }
    }
}

impl EstimatorConfig {
    pub fn with_k(k: usize) -> Self {
        Self { k, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(EstimatorError::InvalidConfig("k must be >= 1".into()));
        }
        if !(self.lnc_alpha > 0.0 && self.lnc_alpha <= 1.0) {
            return Err(EstimatorError::InvalidConfig(format!(
                "lnc_alpha must lie in (0, 1], got {}",
                self.lnc_alpha
            )));
        }
        if !(self.jitter_scale > 0.0 && self.jitter_scale <= 1e-8) {
            return Err(EstimatorError::InvalidConfig(format!(
                "jitter_scale must lie in (0, 1e-8], got {}",
                self.jitter_scale
            )));
        }
        Ok(())
    }

    pub(crate) fn require_samples(&self, n: usize) -> Result<()> {
        self.validate()?;
        if n <= self.k {
            return Err(EstimatorError::TooFewSamples { n, k: self.k });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QualityFlag {
    /// All points coincide; the result is a sentinel.
    Degenerate,
    /// A negative raw estimate was reported as zero.
    ClampedAtZero,
    /// Too few neighbours for local PCA; plain KSG was returned.
    LncFallback,
    /// Only one label class was present.
    SingleClass,
    /// A label class with at most k members was left out of the conditional term.
    SmallClass,
    /// An outcome class needed by an objective had no members; the value is a sentinel.
    EmptyClass,
}

/// An estimate with its provenance.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Estimate {
    pub value_nats: f64,
    #[serde(skip)]
    pub raw_nats: f64,
    pub k: usize,
    pub n: usize,
    pub flags: Vec<QualityFlag>,
}

impl Estimate {
    pub(crate) fn new(value: f64, k: usize, n: usize) -> Self {
        Self {
            value_nats: value,
            raw_nats: value,
            k,
            n,
            flags: Vec::new(),
        }
    }

    pub(crate) fn flagged(mut self, flag: QualityFlag) -> Self {
        if !self.flags.contains(&flag) {
            self.flags.push(flag);
        }
        self
    }

    pub fn has_flag(&self, flag: QualityFlag) -> bool {
        self.flags.contains(&flag)
    }

    pub fn value_in(&self, units: Units) -> f64 {
        units.from_nats(self.value_nats)
    }
}

/// Stream tags keep the jitter of different arguments independent.
#[derive(Debug, Clone, Copy)]
#[repr(u64)]
pub(crate) enum Stream {
    X = 1,
    Y = 2,
    P = 3,
    Q = 4,
}

/// Add seeded uniform noise in `[0, scale·range_j)` to every coordinate `j`.
///
/// The noise added to a point depends only on the seed, the point's own
/// coordinates and, for exact duplicates, on how many identical points came
/// before it. The jittered multiset is therefore independent of sample order.
/// Coordinates with zero range are scaled by their magnitude instead.
pub fn jitter(s: &SampleSet, scale: f64, seed: u64) -> SampleSet {
    let d = s.d();
    let amp: Vec<f64> = (0..d)
        .map(|j| {
            let (lo, hi) = (0..s.n()).map(|i| s.point(i)[j]).fold(
                (f64::INFINITY, f64::NEG_INFINITY),
                |(lo, hi), v| (lo.min(v), hi.max(v)),
            );
            let range = hi - lo;
            let base = if range > 0.0 { range } else { lo.abs().max(1.0) };
            scale * base
        })
        .collect();

    let mut seen: HashMap<Vec<u64>, u64> = HashMap::with_capacity(s.n());
    let mut points = Vec::with_capacity(s.n() * d);
    for i in 0..s.n() {
        let p = s.point(i);
        let key: Vec<u64> = p.iter().map(|v| v.to_bits()).collect();
        let mut h = key.iter().fold(seed, |h, &b| seed::splitmix64(h ^ b));
        let occurrence = seen.entry(key).or_insert(0);
        h = seed::splitmix64(h ^ *occurrence);
        *occurrence += 1;
        for (j, &v) in p.iter().enumerate() {
            let u = seed::unit_f64(seed::derive(h, j as u64));
            points.push(v + amp[j] * u);
        }
    }
    SampleSet {
        points,
        n: s.n(),
        d,
    }
}

pub(crate) fn jitter_stream(s: &SampleSet, cfg: &EstimatorConfig, stream: Stream) -> SampleSet {
    jitter(s, cfg.jitter_scale, seed::derive(cfg.seed, stream as u64))
}

#[inline]
pub(crate) fn digamma(x: f64) -> f64 {
    statrs::function::gamma::digamma(x)
}

use std::collections::HashMap;
use std::f64::consts::PI;

use super::entropy::entropy_of_jittered;
use super::knn::KdTree;
use super::{
    jitter_stream, Estimate, EstimatorConfig, EstimatorError, QualityFlag, Result, SampleSet,
    Stream,
};

/// Nearest-neighbour estimate of D(P‖Q) in nats from samples `p` (n points)
/// and `q` (m points):
///
/// `D = (d/n)·Σ ln(νᵢ/ρᵢ) + ln(m/(n−1))`
///
/// where ρᵢ is the k-th neighbour distance of pᵢ within p and νᵢ its k-th
/// neighbour distance in q. Copies of pᵢ present in q are skipped when
/// finding νᵢ and removed from m, so `D(P‖P) ≈ 0` on identical inputs.
/// The estimate can come out negative.
pub fn kl_knn(p: &SampleSet, q: &SampleSet, cfg: &EstimatorConfig) -> Result<Estimate> {
    if p.d() != q.d() {
        return Err(EstimatorError::DimensionMismatch(p.d(), q.d()));
    }
    cfg.require_samples(p.n())?;
    if q.n() < cfg.k {
        return Err(EstimatorError::TooFewSamples { n: q.n(), k: cfg.k });
    }
    let (n, m, k, d) = (p.n(), q.n(), cfg.k, p.d());
    if p.is_degenerate() {
        return Ok(Estimate::new(f64::INFINITY, k, n).flagged(QualityFlag::Degenerate));
    }
    let jp = jitter_stream(p, cfg, Stream::P);
    let jq = jitter_stream(q, cfg, Stream::Q);
    let tp = KdTree::new(jp.as_slice(), d);
    let tq = KdTree::new(jq.as_slice(), d);
    // A point of p that also occurs verbatim in q is not an independent draw
    // from q, so its own copies are left out of its q-neighbourhood.
    let mut in_q: HashMap<Vec<u64>, usize> = HashMap::new();
    for j in 0..m {
        *in_q.entry(bits(q.point(j))).or_insert(0) += 1;
    }
    let sum: f64 = (0..n)
        .map(|i| {
            let shared = in_q.get(&bits(p.point(i))).copied().unwrap_or(0).min(m - k);
            let rho = tp.kth_distance_excluding(i, k);
            let nu = tq.kth_distance(jp.point(i), k + shared);
            d as f64 * (nu / rho).ln() + ((m - shared) as f64 / (n as f64 - 1.0)).ln()
        })
        .sum();
    Ok(Estimate::new(sum / n as f64, k, n))
}

fn bits(p: &[f64]) -> Vec<u64> {
    p.iter().map(|v| v.to_bits()).collect()
}

/// D(P‖N(mu, sigma²)) for one-dimensional samples, as `−Ĥ(P) − ⟨ln φ(pᵢ)⟩`
/// with Ĥ the Kozachenko–Leonenko entropy and φ the exact Gaussian density.
pub fn kl_to_gaussian(p: &SampleSet, mu: f64, sigma: f64, cfg: &EstimatorConfig) -> Result<Estimate> {
    if !(sigma > 0.0) {
        return Err(EstimatorError::NonPositiveSigma(sigma));
    }
    if p.d() != 1 {
        return Err(EstimatorError::DimensionMismatch(p.d(), 1));
    }
    cfg.require_samples(p.n())?;
    let (n, k) = (p.n(), cfg.k);
    if p.is_degenerate() {
        return Ok(Estimate::new(f64::INFINITY, k, n).flagged(QualityFlag::Degenerate));
    }
    let jp = jitter_stream(p, cfg, Stream::P);
    let entropy = entropy_of_jittered(&jp, k);
    let log_norm = -0.5 * (2.0 * PI * sigma * sigma).ln();
    let mean_log_density = p
        .as_slice()
        .iter()
        .map(|&v| log_norm - (v - mu).powi(2) / (2.0 * sigma * sigma))
        .sum::<f64>()
        / n as f64;
    Ok(Estimate::new(-entropy - mean_log_density, k, n))
}

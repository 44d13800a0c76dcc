use super::knn::KdTree;
use super::{digamma, jitter_stream, Estimate, EstimatorConfig, QualityFlag, Result, SampleSet, Stream};

/// Kozachenko–Leonenko differential entropy in nats.
///
/// `H = ψ(n) − ψ(k) + d·⟨ln 2εᵢ⟩` with εᵢ the Chebyshev distance from point
/// `i` to its k-th neighbour. A set whose points all coincide yields
/// `-inf` flagged [`QualityFlag::Degenerate`].
pub fn entropy_knn(s: &SampleSet, cfg: &EstimatorConfig) -> Result<Estimate> {
    cfg.require_samples(s.n())?;
    if s.is_degenerate() {
        return Ok(Estimate::new(f64::NEG_INFINITY, cfg.k, s.n()).flagged(QualityFlag::Degenerate));
    }
    let js = jitter_stream(s, cfg, Stream::X);
    Ok(Estimate::new(entropy_of_jittered(&js, cfg.k), cfg.k, s.n()))
}

pub(super) fn entropy_of_jittered(s: &SampleSet, k: usize) -> f64 {
    let n = s.n();
    let tree = KdTree::new(s.as_slice(), s.d());
    let mean_log: f64 = (0..n)
        .map(|i| (2.0 * tree.kth_distance_excluding(i, k)).ln())
        .sum::<f64>()
        / n as f64;
    digamma(n as f64) - digamma(k as f64) + s.d() as f64 * mean_log
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimators::EstimatorError;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal, Uniform};

    #[test]
    fn uniform_unit_interval_has_zero_entropy() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let u = Uniform::new(0.0, 1.0).unwrap();
        let v: Vec<f64> = (0..10_000).map(|_| u.sample(&mut rng)).collect();
        let h = entropy_knn(&SampleSet::from_column(&v).unwrap(), &EstimatorConfig::default()).unwrap();
        assert!(h.value_nats.abs() <= 0.05, "{}", h.value_nats);
    }

    #[test]
    fn standard_gaussian_entropy() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let g = Normal::new(0.0, 1.0).unwrap();
        let v: Vec<f64> = (0..10_000).map(|_| g.sample(&mut rng)).collect();
        let h = entropy_knn(&SampleSet::from_column(&v).unwrap(), &EstimatorConfig::default()).unwrap();
        let exact = 0.5 * (2.0 * std::f64::consts::PI * std::f64::consts::E).ln();
        assert!((h.value_nats - exact).abs() <= 0.05, "{}", h.value_nats);
    }

    #[test]
    fn bivariate_uniform_square_has_zero_entropy() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let u = Uniform::new(0.0, 1.0).unwrap();
        let v: Vec<f64> = (0..8_000).map(|_| u.sample(&mut rng)).collect();
        let h = entropy_knn(&SampleSet::new(v, 2).unwrap(), &EstimatorConfig::default()).unwrap();
        assert!(h.value_nats.abs() <= 0.05, "{}", h.value_nats);
    }

    #[test]
    fn identical_points_give_degenerate_sentinel() {
        let s = SampleSet::from_column(&[0.5; 4]).unwrap();
        let h = entropy_knn(&s, &EstimatorConfig::default()).unwrap();
        assert_eq!(h.value_nats, f64::NEG_INFINITY);
        assert!(h.has_flag(QualityFlag::Degenerate));
    }

    #[test]
    fn needs_more_than_k_points() {
        let s = SampleSet::from_column(&[0.1, 0.2, 0.3]).unwrap();
        assert_eq!(
            entropy_knn(&s, &EstimatorConfig::default()),
            Err(EstimatorError::TooFewSamples { n: 3, k: 3 })
        );
    }
}

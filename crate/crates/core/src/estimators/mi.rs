use std::collections::BTreeMap;

use nalgebra::{DMatrix, SymmetricEigen};

use super::entropy::entropy_of_jittered;
use super::knn::{chebyshev, KdTree};
use super::{
    digamma, jitter_stream, Estimate, EstimatorConfig, EstimatorError, LabeledSampleSet,
    QualityFlag, Result, SampleSet, Stream,
};

fn check_pair(x: &SampleSet, y: &SampleSet, cfg: &EstimatorConfig) -> Result<()> {
    if x.n() != y.n() {
        return Err(EstimatorError::LengthMismatch(x.n(), y.n()));
    }
    cfg.require_samples(x.n())
}

fn report(raw: f64, k: usize, n: usize) -> Estimate {
    let mut e = Estimate::new(raw.max(0.0), k, n);
    e.raw_nats = raw;
    if raw < 0.0 {
        e = e.flagged(QualityFlag::ClampedAtZero);
    }
    e
}

fn degenerate(k: usize, n: usize) -> Estimate {
    Estimate::new(0.0, k, n).flagged(QualityFlag::Degenerate)
}

/// Kraskov–Stögbauer–Grassberger estimator (algorithm 1) of I(X;Y) in nats.
///
/// `I = ψ(k) + ψ(n) − ⟨ψ(n_x + 1) + ψ(n_y + 1)⟩`, where εᵢ is the joint-space
/// k-th neighbour distance and n_x, n_y count marginal neighbours strictly
/// inside εᵢ. The reported value is clamped at zero; `raw_nats` keeps the
/// unclamped estimate. A constant X or Y gives exactly zero.
pub fn mi_ksg(x: &SampleSet, y: &SampleSet, cfg: &EstimatorConfig) -> Result<Estimate> {
    check_pair(x, y, cfg)?;
    let (n, k) = (x.n(), cfg.k);
    if x.is_degenerate() || y.is_degenerate() {
        return Ok(degenerate(k, n));
    }
    let jx = jitter_stream(x, cfg, Stream::X);
    let jy = jitter_stream(y, cfg, Stream::Y);
    Ok(report(ksg1_jittered(&jx, &jy, k), k, n))
}

fn ksg1_jittered(jx: &SampleSet, jy: &SampleSet, k: usize) -> f64 {
    let n = jx.n();
    let joint = jx.join(jy).expect("equal lengths checked");
    let tj = KdTree::new(joint.as_slice(), joint.d());
    let tx = KdTree::new(jx.as_slice(), jx.d());
    let ty = KdTree::new(jy.as_slice(), jy.d());
    let mut acc = 0.0;
    for i in 0..n {
        let eps = tj.kth_distance_excluding(i, k);
        let nx = tx.count_within(jx.point(i), eps) - 1;
        let ny = ty.count_within(jy.point(i), eps) - 1;
        acc += digamma(nx as f64 + 1.0) + digamma(ny as f64 + 1.0);
    }
    digamma(k as f64) + digamma(n as f64) - acc / n as f64
}

/// KSG with local non-uniformity correction, in nats.
///
/// The base term is the rectangle-neighbourhood KSG estimator: for each point
/// the k nearest joint neighbours define a marginal box half-width per
/// variable, and marginal counts (self included) are taken strictly inside
/// it, giving `ψ(k) − 1/k + ψ(n) − ⟨ψ(n_x) + ψ(n_y)⟩`. The correction
/// compares, per point, the log-volume of the PCA-aligned bounding box of the
/// k+1 neighbourhood points with that of the axis-aligned one; where the ratio
/// falls below `lnc_alpha` the log-ratio is added (averaged over all n
/// points). Needs `k ≥ d + 1` for the joint dimension d, otherwise plain
/// [`mi_ksg`] is returned with [`QualityFlag::LncFallback`].
pub fn mi_lnc(x: &SampleSet, y: &SampleSet, cfg: &EstimatorConfig) -> Result<Estimate> {
    check_pair(x, y, cfg)?;
    let (n, k) = (x.n(), cfg.k);
    let dim = x.d() + y.d();
    if k < dim + 1 {
        return Ok(mi_ksg(x, y, cfg)?.flagged(QualityFlag::LncFallback));
    }
    if x.is_degenerate() || y.is_degenerate() {
        return Ok(degenerate(k, n));
    }
    let jx = jitter_stream(x, cfg, Stream::X);
    let jy = jitter_stream(y, cfg, Stream::Y);
    let joint = jx.join(&jy)?;
    let tj = KdTree::new(joint.as_slice(), dim);
    let tx = KdTree::new(jx.as_slice(), jx.d());
    let ty = KdTree::new(jy.as_slice(), jy.d());
    let dx = jx.d();
    let log_alpha = cfg.lnc_alpha.ln();

    let mut psi_sum = 0.0;
    let mut correction = 0.0;
    let mut local = DMatrix::<f64>::zeros(k + 1, dim);
    for i in 0..n {
        let centre = joint.point(i);
        let nbrs = tj.k_nearest(centre, k + 1, None);

        let (mut eps_x, mut eps_y) = (0.0f64, 0.0f64);
        for (row, &(_, j)) in nbrs.iter().enumerate() {
            let p = joint.point(j);
            eps_x = eps_x.max(chebyshev(&p[..dx], &centre[..dx]));
            eps_y = eps_y.max(chebyshev(&p[dx..], &centre[dx..]));
            for c in 0..dim {
                local[(row, c)] = p[c] - centre[c];
            }
        }
        let nx = tx.count_within(jx.point(i), eps_x);
        let ny = ty.count_within(jy.point(i), eps_y);
        psi_sum += digamma(nx as f64) + digamma(ny as f64);

        let log_box: f64 = (0..dim).map(|c| local.column(c).amax().ln()).sum();
        let cov = local.transpose() * &local / k as f64;
        let eig = SymmetricEigen::new(cov);
        let rotated = &local * eig.eigenvectors;
        let log_pca: f64 = (0..dim).map(|c| rotated.column(c).amax().ln()).sum();
        if log_pca < log_box + log_alpha {
            correction += log_box - log_pca;
        }
    }
    let base = digamma(k as f64) - 1.0 / k as f64 + digamma(n as f64) - psi_sum / n as f64;
    Ok(report(base + correction / n as f64, k, n))
}

/// Mutual information between discrete labels and continuous values,
/// `I = H(C) − Σ_d p(d)·H(C | D = d)`, each entropy by [`super::entropy_knn`].
///
/// Classes with at most k members are left out of the conditional sum and
/// raise [`QualityFlag::SmallClass`]. A single class gives exactly zero.
pub fn mi_mixed(s: &LabeledSampleSet, cfg: &EstimatorConfig) -> Result<Estimate> {
    let values = &s.values;
    let (n, k) = (values.n(), cfg.k);
    cfg.require_samples(n)?;

    let mut classes: BTreeMap<i64, Vec<usize>> = BTreeMap::new();
    for (i, &label) in s.labels.iter().enumerate() {
        classes.entry(label).or_default().push(i);
    }
    if classes.len() == 1 {
        return Ok(Estimate::new(0.0, k, n).flagged(QualityFlag::SingleClass));
    }
    if classes.values().all(|members| members.len() <= k) {
        let largest = classes.values().map(Vec::len).max().unwrap_or(0);
        return Err(EstimatorError::TooFewSamples { n: largest, k });
    }
    if values.is_degenerate() {
        return Ok(degenerate(k, n));
    }

    let jv = jitter_stream(values, cfg, Stream::X);
    let mut estimate = Estimate::new(0.0, k, n);
    let mut value = entropy_of_jittered(&jv, k);
    for members in classes.values() {
        if members.len() <= k {
            estimate = estimate.flagged(QualityFlag::SmallClass);
            continue;
        }
        let mut pts = Vec::with_capacity(members.len() * jv.d());
        for &i in members {
            pts.extend_from_slice(jv.point(i));
        }
        let sub = SampleSet::new(pts, jv.d())?;
        value -= members.len() as f64 / n as f64 * entropy_of_jittered(&sub, k);
    }
    estimate.value_nats = value;
    estimate.raw_nats = value;
    Ok(estimate)
}

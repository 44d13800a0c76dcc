//! Analytic oracle fixtures, regenerated from seeds.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use infofit::seed::derive;

/// Correlation of the Gaussian MI fixture; its MI is `−½ ln(1 − ρ²)`.
pub const GAUSSIAN_RHO: f64 = 0.9;

pub fn gaussian_mi_exact(rho: f64) -> f64 {
    -0.5 * (1.0 - rho * rho).ln()
}

/// `KL(N(m1, s1²) ‖ N(m2, s2²))`.
pub fn gaussian_kl_exact(m1: f64, s1: f64, m2: f64, s2: f64) -> f64 {
    (s2 / s1).ln() + (s1 * s1 + (m1 - m2).powi(2)) / (2.0 * s2 * s2) - 0.5
}

#[derive(Debug, Clone, PartialEq)]
pub struct Fixture {
    pub name: &'static str,
    pub about: String,
    pub headers: Vec<&'static str>,
    /// Column-major.
    pub columns: Vec<Vec<f64>>,
}

impl Fixture {
    pub fn file_name(&self) -> String {
        format!("{}.csv", self.name)
    }

    pub fn to_csv(&self, comment: &str) -> String {
        let mut out = format!("# {comment}\n# {}\n{}\n", self.about, self.headers.join(","));
        let n = self.columns[0].len();
        for i in 0..n {
            let row: Vec<String> = self.columns.iter().map(|c| c[i].to_string()).collect();
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }
}

fn normal(rng: &mut ChaCha8Rng, n: usize, mu: f64, sigma: f64) -> Vec<f64> {
    (0..n)
        .map(|_| {
            let z: f64 = StandardNormal.sample(rng);
            mu + sigma * z
        })
        .collect()
}

pub fn gaussian_pair(n: usize, rho: f64, seed: u64) -> (Vec<f64>, Vec<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x = Vec::with_capacity(n);
    let mut y = Vec::with_capacity(n);
    for _ in 0..n {
        let a: f64 = StandardNormal.sample(&mut rng);
        let b: f64 = StandardNormal.sample(&mut rng);
        x.push(a);
        y.push(rho * a + (1.0 - rho * rho).sqrt() * b);
    }
    (x, y)
}

/// Every fixture, each drawn from its own stream of `seed`.
pub fn all_fixtures(seed: u64, n: usize) -> Vec<Fixture> {
    let (x, y) = gaussian_pair(n, GAUSSIAN_RHO, derive(seed, 0));
    let mut rng = ChaCha8Rng::seed_from_u64(derive(seed, 1));
    let ux: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
    let uy: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
    let p = normal(&mut ChaCha8Rng::seed_from_u64(derive(seed, 2)), n, 0.0, 1.0);
    let q_same = normal(&mut ChaCha8Rng::seed_from_u64(derive(seed, 3)), n, 0.0, 1.0);
    let q_shift = normal(&mut ChaCha8Rng::seed_from_u64(derive(seed, 4)), n, 1.0, 1.0);
    let q_wide = normal(&mut ChaCha8Rng::seed_from_u64(derive(seed, 5)), n, 0.0, 2.0);
    vec![
        Fixture {
            name: "gaussian_mi",
            about: format!(
                "bivariate normal rho={GAUSSIAN_RHO}; MI={:.4} nats",
                gaussian_mi_exact(GAUSSIAN_RHO)
            ),
            headers: vec!["x", "y"],
            columns: vec![x, y],
        },
        Fixture {
            name: "uniform",
            about: "independent U(0,1) columns; MI=0, H(x)=0 nats".into(),
            headers: vec!["x", "y"],
            columns: vec![ux, uy],
        },
        Fixture {
            name: "kl_p",
            about: "N(0,1)".into(),
            headers: vec!["v"],
            columns: vec![p],
        },
        Fixture {
            name: "kl_q_same",
            about: "N(0,1), independent of kl_p; KL(p||q)=0".into(),
            headers: vec!["v"],
            columns: vec![q_same],
        },
        Fixture {
            name: "kl_q_shift",
            about: format!("N(1,1); KL(p||q)={:.4} nats", gaussian_kl_exact(0.0, 1.0, 1.0, 1.0)),
            headers: vec!["v"],
            columns: vec![q_shift],
        },
        Fixture {
            name: "kl_q_wide",
            about: format!("N(0,4); KL(p||q)={:.4} nats", gaussian_kl_exact(0.0, 1.0, 0.0, 2.0)),
            headers: vec!["v"],
            columns: vec![q_wide],
        },
    ]
}

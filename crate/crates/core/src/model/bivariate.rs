use nalgebra::DMatrix;
use rand_distr::{Distribution, StandardNormal};

use super::{Dataset, Domain, Model};
use crate::error::{Error, Result};
use crate::optimize::bisect;
use crate::rng::SimRng;

/// iid standard bivariate normal pairs with unknown correlation θ ∈ (−1, 1).
///
/// The first coordinate of each pair is the response, the second is the
/// single covariate column.
#[derive(Debug, Clone, Copy, Default)]
pub struct BivariateCorrelation;

struct Stats {
    n: f64,
    /// Σ (x1² + x2²)
    a: f64,
    /// Σ x1 x2
    b: f64,
}

fn stats(data: &Dataset) -> Stats {
    let x2 = data
        .covariates
        .as_ref()
        .expect("bivariate data carries the second coordinate as a covariate column");
    let mut a = 0.0;
    let mut b = 0.0;
    for (i, &u) in data.responses.iter().enumerate() {
        let v = x2[(i, 0)];
        a += u * u + v * v;
        b += u * v;
    }
    Stats {
        n: data.n() as f64,
        a,
        b,
    }
}

fn ll(s: &Stats, t: f64) -> f64 {
    if !(t > -1.0 && t < 1.0) {
        return f64::NEG_INFINITY;
    }
    let u = 1.0 - t * t;
    -0.5 * s.n * u.ln() - (s.a - 2.0 * t * s.b) / (2.0 * u)
}

fn score(s: &Stats, t: f64) -> f64 {
    let u = 1.0 - t * t;
    s.n * t / u + s.b / u - t * (s.a - 2.0 * t * s.b) / (u * u)
}

/// Roots of the likelihood equation −nθ³ + bθ² + (n − a)θ + b = 0 in (−1, 1),
/// returning the one with the largest likelihood.
fn maximize(s: &Stats) -> Option<f64> {
    let cubic = |t: f64| -s.n * t * t * t + s.b * t * t + (s.n - s.a) * t + s.b;
    // split (−1, 1) at the cubic's critical points so each piece is monotone
    let (qa, qb, qc) = (-3.0 * s.n, 2.0 * s.b, s.n - s.a);
    let mut knots = vec![-1.0, 1.0];
    let disc = qb * qb - 4.0 * qa * qc;
    if disc > 0.0 {
        for r in [(-qb + disc.sqrt()) / (2.0 * qa), (-qb - disc.sqrt()) / (2.0 * qa)] {
            if r > -1.0 && r < 1.0 {
                knots.push(r);
            }
        }
    }
    knots.sort_by(f64::total_cmp);
    let mut best: Option<(f64, f64)> = None;
    for w in knots.windows(2) {
        if let Some(r) = bisect(&cubic, w[0], w[1], 1e-15) {
            if r > -1.0 && r < 1.0 {
                let v = ll(s, r);
                if best.is_none_or(|(_, bv)| v > bv) {
                    best = Some((r, v));
                }
            }
        }
    }
    best.map(|(r, _)| r)
}

impl Model for BivariateCorrelation {
    fn name(&self) -> &'static str {
        "bivariate-normal"
    }

    fn dim(&self) -> usize {
        1
    }

    fn domain(&self) -> Domain {
        Domain::OpenBox {
            lo: vec![-1.0],
            hi: vec![1.0],
        }
    }

    fn log_likelihood(&self, data: &Dataset, theta: &[f64]) -> f64 {
        ll(&stats(data), theta[0])
    }

    fn sample(&self, theta: &[f64], n: usize, rng: &mut SimRng) -> Dataset {
        let t = theta[0];
        let c = (1.0 - t * t).max(0.0).sqrt();
        let mut x1 = Vec::with_capacity(n);
        let mut x2 = Vec::with_capacity(n);
        for _ in 0..n {
            let z1: f64 = StandardNormal.sample(rng);
            let z2: f64 = StandardNormal.sample(rng);
            x1.push(z1);
            x2.push(t * z1 + c * z2);
        }
        Dataset {
            responses: x1,
            covariates: Some(DMatrix::from_vec(n, 1, x2)),
            observed: None,
        }
    }

    fn mle(&self, data: &Dataset) -> Result<Vec<f64>> {
        let s = stats(data);
        maximize(&s)
            .map(|r| vec![r])
            .ok_or_else(|| Error::DegenerateMle("no interior root of the correlation likelihood equation".into()))
    }

    fn sup_log_likelihood(&self, data: &Dataset) -> Option<f64> {
        let s = stats(data);
        maximize(&s).map(|r| ll(&s, r))
    }

    fn score(&self, data: &Dataset, theta: &[f64]) -> Vec<f64> {
        vec![score(&stats(data), theta[0])]
    }
}

use nalgebra::DMatrix;
use rand::Rng;

use super::{Dataset, Domain, Model};
use crate::error::{Error, Result};
use crate::rng::SimRng;

/// iid Bernoulli(θ) trials; the sufficient statistic is the success count.
#[derive(Debug, Clone, Copy, Default)]
pub struct Bernoulli;

impl Bernoulli {
    /// Dataset with `successes` ones followed by zeros.
    pub fn dataset(trials: usize, successes: usize) -> Dataset {
        assert!(successes <= trials);
        Dataset::new((0..trials).map(|i| if i < successes { 1.0 } else { 0.0 }).collect())
    }

    fn counts(data: &Dataset) -> (f64, f64) {
        let s: f64 = data.responses.iter().sum();
        (s, data.n() as f64)
    }

    /// Log-likelihood from sufficient statistics, with 0·log 0 = 0.
    pub fn log_likelihood_counts(s: f64, n: f64, theta: f64) -> f64 {
        if !(0.0..=1.0).contains(&theta) {
            return f64::NEG_INFINITY;
        }
        let a = if s > 0.0 { s * theta.ln() } else { 0.0 };
        let b = if n - s > 0.0 { (n - s) * (1.0 - theta).ln() } else { 0.0 };
        a + b
    }
}

impl Model for Bernoulli {
    fn name(&self) -> &'static str {
        "binomial"
    }

    fn dim(&self) -> usize {
        1
    }

    fn domain(&self) -> Domain {
        Domain::UnitInterval
    }

    fn log_likelihood(&self, data: &Dataset, theta: &[f64]) -> f64 {
        let (s, n) = Self::counts(data);
        Self::log_likelihood_counts(s, n, theta[0])
    }

    fn sample(&self, theta: &[f64], n: usize, rng: &mut SimRng) -> Dataset {
        let p = theta[0];
        Dataset::new(
            (0..n)
                .map(|_| if rng.random::<f64>() < p { 1.0 } else { 0.0 })
                .collect(),
        )
    }

    fn mle(&self, data: &Dataset) -> Result<Vec<f64>> {
        let (s, n) = Self::counts(data);
        if n == 0.0 || s == 0.0 || s == n {
            return Err(Error::DegenerateMle(format!(
                "binomial MLE on the boundary ({s} of {n} successes)"
            )));
        }
        Ok(vec![s / n])
    }

    fn sup_log_likelihood(&self, data: &Dataset) -> Option<f64> {
        let (s, n) = Self::counts(data);
        if n == 0.0 {
            return None;
        }
        Some(Self::log_likelihood_counts(s, n, s / n))
    }

    fn score(&self, data: &Dataset, theta: &[f64]) -> Vec<f64> {
        let (s, n) = Self::counts(data);
        let t = theta[0];
        vec![s / t - (n - s) / (1.0 - t)]
    }

    fn analytic_information(&self, data: &Dataset, theta: &[f64]) -> Option<DMatrix<f64>> {
        let (s, n) = Self::counts(data);
        let t = theta[0];
        Some(DMatrix::from_element(
            1,
            1,
            s / (t * t) + (n - s) / ((1.0 - t) * (1.0 - t)),
        ))
    }
}

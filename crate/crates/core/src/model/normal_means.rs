use nalgebra::DMatrix;
use rand_distr::{Distribution, Normal};

use super::{Dataset, Domain, Model};
use crate::error::{Error, Result};
use crate::rng::SimRng;

/// sign(x)·max(|x| − λ, 0).
pub fn soft_threshold(x: f64, lambda: f64) -> f64 {
    x.signum() * (x.abs() - lambda).max(0.0)
}

/// Many normal means X_i ~ N(θ_i, σ²), i = 1..dim, with known σ and an
/// optional lasso penalty: the likelihood is multiplied by e^{−λ‖θ‖₁}.
///
/// With λ > 0 the "MLE" is the penalized maximizer, coordinatewise
/// soft-thresholding at σ²λ. The information is always the unpenalized σ⁻²I.
#[derive(Debug, Clone, Copy)]
pub struct NormalMeans {
    pub dim: usize,
    pub sigma: f64,
    pub lambda: f64,
}

impl NormalMeans {
    pub fn new(dim: usize, sigma: f64, lambda: f64) -> Self {
        assert!(sigma > 0.0 && lambda >= 0.0);
        Self { dim, sigma, lambda }
    }

    /// λ = (σ² log n)^{1/2}.
    pub fn universal_lambda(dim: usize, sigma: f64) -> f64 {
        (sigma * sigma * (dim as f64).ln()).sqrt()
    }
}

impl Model for NormalMeans {
    fn name(&self) -> &'static str {
        "normal-means"
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn domain(&self) -> Domain {
        Domain::Unconstrained
    }

    fn log_likelihood(&self, data: &Dataset, theta: &[f64]) -> f64 {
        if data.responses.len() != self.dim || !self.in_domain(theta) {
            return f64::NEG_INFINITY;
        }
        let s2 = self.sigma * self.sigma;
        data.responses
            .iter()
            .zip(theta)
            .map(|(x, t)| -(x - t).powi(2) / (2.0 * s2) - self.lambda * t.abs())
            .sum()
    }

    fn sample(&self, theta: &[f64], n: usize, rng: &mut SimRng) -> Dataset {
        assert_eq!(n, self.dim, "normal-means sample size equals the dimension");
        let z = Normal::new(0.0, self.sigma).expect("positive sigma");
        Dataset::new(theta.iter().map(|t| t + z.sample(rng)).collect())
    }

    fn mle(&self, data: &Dataset) -> Result<Vec<f64>> {
        if data.responses.len() != self.dim {
            return Err(Error::InvalidInput(format!(
                "normal-means expects {} responses, got {}",
                self.dim,
                data.responses.len()
            )));
        }
        let cut = self.sigma * self.sigma * self.lambda;
        Ok(data.responses.iter().map(|&x| soft_threshold(x, cut)).collect())
    }

    fn score(&self, data: &Dataset, theta: &[f64]) -> Vec<f64> {
        let s2 = self.sigma * self.sigma;
        data.responses
            .iter()
            .zip(theta)
            .map(|(x, t)| (x - t) / s2 - if *t == 0.0 { 0.0 } else { self.lambda * t.signum() })
            .collect()
    }

    fn analytic_information(&self, _data: &Dataset, _theta: &[f64]) -> Option<DMatrix<f64>> {
        Some(DMatrix::identity(self.dim, self.dim) / (self.sigma * self.sigma))
    }
}

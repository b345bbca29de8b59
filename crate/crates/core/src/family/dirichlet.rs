use rand_distr::{Distribution, Gamma};

use super::{check_xi, FamilyKind, FamilyRecord, ScalarIndexed, VariationalFamily};
use crate::contour::{ContourKind, Evaluation, PossibilityContour, TIE_TOLERANCE};
use crate::error::{Error, Result};
use crate::rng::{stream, SimRng};
use crate::special::log_gamma;

/// Dirichlet with mean m = X/n and precision n·ξ.
#[derive(Debug, Clone)]
pub struct DirichletFamily {
    pub mean: Vec<f64>,
    pub n: f64,
    pub xi: f64,
}

impl DirichletFamily {
    pub fn new(mean: Vec<f64>, n: f64, xi: f64) -> Result<Self> {
        check_xi(xi)?;
        if mean.len() < 2 || mean.iter().any(|&m| !(m > 0.0)) || (mean.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidInput(
                "Dirichlet mean must lie in the simplex interior".into(),
            ));
        }
        if !(n > 0.0) {
            return Err(Error::InvalidInput("Dirichlet sample size must be positive".into()));
        }
        Ok(Self { mean, n, xi })
    }

    /// Family anchored at observed cell counts.
    pub fn from_counts(counts: &[f64], xi: f64) -> Result<Self> {
        let n: f64 = counts.iter().sum();
        Self::new(counts.iter().map(|c| c / n).collect(), n, xi)
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn concentration(&self) -> Vec<f64> {
        self.mean.iter().map(|m| self.n * self.xi * m).collect()
    }

    /// Log density on the simplex; `-inf` off the open simplex.
    pub fn log_density(&self, theta: &[f64]) -> f64 {
        if theta.len() != self.mean.len()
            || theta.iter().any(|&t| !(t > 0.0))
            || (theta.iter().sum::<f64>() - 1.0).abs() > 1e-9
        {
            return f64::NEG_INFINITY;
        }
        let a = self.concentration();
        let total: f64 = a.iter().sum();
        log_gamma(total) - a.iter().map(|&v| log_gamma(v)).sum::<f64>()
            + a.iter().zip(theta).map(|(ak, t)| (ak - 1.0) * t.ln()).sum::<f64>()
    }

    pub fn record(&self, alpha: f64, seed: u64, iterations: usize) -> FamilyRecord {
        FamilyRecord {
            kind: FamilyKind::Dirichlet,
            mean: self.mean.clone(),
            information: vec![self.n],
            xi: vec![self.xi],
            eigenvalues: None,
            eigenvectors: None,
            alpha,
            seed,
            iterations,
        }
    }
}

impl VariationalFamily for DirichletFamily {
    fn dim(&self) -> usize {
        self.mean.len()
    }

    fn sample_one(&self, rng: &mut SimRng) -> Vec<f64> {
        let mut g: Vec<f64> = self
            .concentration()
            .into_iter()
            .map(|a| Gamma::new(a, 1.0).expect("positive concentration").sample(rng))
            .collect();
        let total: f64 = g.iter().sum();
        if total > 0.0 {
            g.iter_mut().for_each(|v| *v /= total);
        } else {
            // every gamma underflowed: fall back to the mean
            g.clone_from(&self.mean);
        }
        g
    }
}

impl ScalarIndexed for DirichletFamily {
    fn xi(&self) -> f64 {
        self.xi
    }

    fn with_xi(&self, xi: f64) -> Result<Self> {
        check_xi(xi)?;
        Ok(Self { xi, ..self.clone() })
    }
}

/// Probability-to-possibility transform of a Dirichlet: θ ↦ Q{q(Θ) ≤ q(θ)},
/// estimated with `m` draws.
#[derive(Debug, Clone)]
pub struct DirichletContour {
    pub family: DirichletFamily,
    pub m: usize,
}

impl DirichletContour {
    pub fn new(family: DirichletFamily, m: usize) -> Self {
        assert!(m >= 1);
        Self { family, m }
    }
}

impl PossibilityContour for DirichletContour {
    fn dim(&self) -> usize {
        self.family.dim()
    }

    fn kind(&self) -> ContourKind {
        ContourKind::DirichletMc
    }

    fn evaluate(&self, theta: &[f64], seed: u64) -> Evaluation {
        let q = self.family.log_density(theta);
        if q == f64::NEG_INFINITY {
            return Evaluation::domain_violation();
        }
        let mut rng = stream(seed, &[]);
        let hits = (0..self.m)
            .filter(|_| self.family.log_density(&self.family.sample_one(&mut rng)) <= q + TIE_TOLERANCE)
            .count();
        Evaluation::ok(hits as f64 / self.m as f64)
    }

    fn mode(&self) -> Option<Vec<f64>> {
        let a = self.family.concentration();
        let k = a.len() as f64;
        let total: f64 = a.iter().sum();
        a.iter()
            .all(|&v| v > 1.0)
            .then(|| a.iter().map(|v| (v - 1.0) / (total - k)).collect())
    }

    fn monte_carlo_size(&self) -> Option<usize> {
        Some(self.m)
    }
}

use nalgebra::DMatrix;
use rand_distr::Distribution;
use serde::{Deserialize, Serialize};

use super::{Dataset, Domain, Model};
use crate::error::{Error, Result};
use crate::rng::SimRng;
use crate::special::{digamma, log_gamma, trigamma};

/// Coordinates used for the gamma parameter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GammaParam {
    /// (shape k, scale s)
    ShapeScale,
    /// (log k, log s)
    LogShapeLogScale,
    /// (shape k, mean μ = k·s)
    ShapeMean,
}

/// Two-parameter gamma model with density x^{k−1} e^{−x/s} / (Γ(k) s^k).
#[derive(Debug, Clone, Copy)]
pub struct Gamma {
    pub param: GammaParam,
}

struct Suff {
    n: f64,
    sum: f64,
    sum_log: f64,
}

impl Gamma {
    pub fn new(param: GammaParam) -> Self {
        Self { param }
    }

    /// Convert a parameter in this model's coordinates to (shape, scale).
    pub fn shape_scale(&self, theta: &[f64]) -> (f64, f64) {
        match self.param {
            GammaParam::ShapeScale => (theta[0], theta[1]),
            GammaParam::LogShapeLogScale => (theta[0].exp(), theta[1].exp()),
            GammaParam::ShapeMean => (theta[0], theta[1] / theta[0]),
        }
    }

    /// Inverse of [`Gamma::shape_scale`].
    pub fn from_shape_scale(&self, k: f64, s: f64) -> Vec<f64> {
        match self.param {
            GammaParam::ShapeScale => vec![k, s],
            GammaParam::LogShapeLogScale => vec![k.ln(), s.ln()],
            GammaParam::ShapeMean => vec![k, k * s],
        }
    }

    fn suff(data: &Dataset) -> Option<Suff> {
        let xs = &data.responses;
        if xs.is_empty() || xs.iter().any(|&x| !(x > 0.0) || !x.is_finite()) {
            return None;
        }
        Some(Suff {
            n: xs.len() as f64,
            sum: xs.iter().sum(),
            sum_log: xs.iter().map(|x| x.ln()).sum(),
        })
    }

    fn ll_shape_scale(s: &Suff, k: f64, scale: f64) -> f64 {
        if !(k > 0.0 && scale > 0.0 && k.is_finite() && scale.is_finite()) {
            return f64::NEG_INFINITY;
        }
        (k - 1.0) * s.sum_log - s.sum / scale - s.n * k * scale.ln() - s.n * log_gamma(k)
    }

    /// Maximum-likelihood shape for given c = ln x̄ − mean(ln x) > 0:
    /// the root of ln k − ψ(k) = c.
    pub fn shape_for(c: f64) -> f64 {
        let mut k = (3.0 - c + ((c - 3.0).powi(2) + 24.0 * c).sqrt()) / (12.0 * c);
        for _ in 0..100 {
            let f = k.ln() - digamma(k) - c;
            let df = 1.0 / k - trigamma(k);
            let next = k - f / df;
            let next = if next > 0.0 { next } else { k / 2.0 };
            if (next - k).abs() <= 1e-14 * k {
                return next;
            }
            k = next;
        }
        k
    }

    /// Score and Hessian in (shape, scale).
    fn derivatives(s: &Suff, k: f64, scale: f64) -> ([f64; 2], [[f64; 2]; 2]) {
        let g = [
            s.sum_log - s.n * scale.ln() - s.n * digamma(k),
            s.sum / (scale * scale) - s.n * k / scale,
        ];
        let hkk = -s.n * trigamma(k);
        let hks = -s.n / scale;
        let hss = -2.0 * s.sum / scale.powi(3) + s.n * k / (scale * scale);
        (g, [[hkk, hks], [hks, hss]])
    }
}

impl Model for Gamma {
    fn name(&self) -> &'static str {
        "gamma"
    }

    fn dim(&self) -> usize {
        2
    }

    fn domain(&self) -> Domain {
        match self.param {
            GammaParam::LogShapeLogScale => Domain::Unconstrained,
            _ => Domain::PositiveOrthant,
        }
    }

    fn log_likelihood(&self, data: &Dataset, theta: &[f64]) -> f64 {
        if !self.in_domain(theta) {
            return f64::NEG_INFINITY;
        }
        let Some(s) = Self::suff(data) else {
            return f64::NEG_INFINITY;
        };
        let (k, scale) = self.shape_scale(theta);
        Self::ll_shape_scale(&s, k, scale)
    }

    fn sample(&self, theta: &[f64], n: usize, rng: &mut SimRng) -> Dataset {
        let (k, scale) = self.shape_scale(theta);
        let dist = rand_distr::Gamma::new(k, scale).expect("gamma parameters must be positive");
        Dataset::new((0..n).map(|_| dist.sample(rng).max(f64::MIN_POSITIVE)).collect())
    }

    fn mle(&self, data: &Dataset) -> Result<Vec<f64>> {
        let s = Self::suff(data).ok_or_else(|| Error::DegenerateMle("gamma: data must be positive".into()))?;
        let c = (s.sum / s.n).ln() - s.sum_log / s.n;
        if !(c > 1e-12) {
            return Err(Error::DegenerateMle("gamma: all observations equal".into()));
        }
        let k = Self::shape_for(c);
        Ok(self.from_shape_scale(k, s.sum / s.n / k))
    }

    fn score(&self, data: &Dataset, theta: &[f64]) -> Vec<f64> {
        let Some(s) = Self::suff(data) else {
            return vec![f64::NAN; 2];
        };
        let (k, scale) = self.shape_scale(theta);
        let (g, _) = Self::derivatives(&s, k, scale);
        match self.param {
            GammaParam::ShapeScale => g.to_vec(),
            GammaParam::LogShapeLogScale => vec![k * g[0], scale * g[1]],
            // s = μ/k: ∂/∂k|μ = ∂k − (s/k)∂s, ∂/∂μ = ∂s/k
            GammaParam::ShapeMean => vec![g[0] - scale / k * g[1], g[1] / k],
        }
    }

    fn analytic_information(&self, data: &Dataset, theta: &[f64]) -> Option<DMatrix<f64>> {
        let s = Self::suff(data)?;
        let (k, scale) = self.shape_scale(theta);
        let (g, h) = Self::derivatives(&s, k, scale);
        let h = match self.param {
            GammaParam::ShapeScale => h,
            GammaParam::LogShapeLogScale => [
                [k * g[0] + k * k * h[0][0], k * scale * h[0][1]],
                [k * scale * h[0][1], scale * g[1] + scale * scale * h[1][1]],
            ],
            GammaParam::ShapeMean => return None,
        };
        Some(-DMatrix::from_row_slice(2, 2, &[h[0][0], h[0][1], h[1][0], h[1][1]]))
    }
}

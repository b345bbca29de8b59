use nalgebra::DMatrix;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::{Dataset, Domain, Model};
use crate::error::{Error, Result};
use crate::optimize::{fd_hessian_from_gradient, newton_maximize, NewtonOptions};
use crate::rng::SimRng;
use crate::special::{inv_mills, norm_log_cdf};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LogNormalParam {
    /// (θ1, θ2) = (mean, variance) of log Y
    MeanVariance,
    /// (θ1, log θ2)
    MeanLogVariance,
}

/// Log-normal model for possibly left-censored concentrations.
///
/// An observation with `observed = false` contributes the cdf P_θ(z) instead
/// of the density, i.e. the θ-part of the separable censored likelihood.
/// Without censor flags every observation is treated as exact.
#[derive(Debug, Clone, Copy)]
pub struct LogNormal {
    pub param: LogNormalParam,
}

impl LogNormal {
    pub fn new(param: LogNormalParam) -> Self {
        Self { param }
    }

    /// (μ, σ²) of log Y.
    pub fn mean_variance(&self, theta: &[f64]) -> (f64, f64) {
        match self.param {
            LogNormalParam::MeanVariance => (theta[0], theta[1]),
            LogNormalParam::MeanLogVariance => (theta[0], theta[1].exp()),
        }
    }

    pub fn from_mean_variance(&self, mu: f64, v: f64) -> Vec<f64> {
        match self.param {
            LogNormalParam::MeanVariance => vec![mu, v],
            LogNormalParam::MeanLogVariance => vec![mu, v.ln()],
        }
    }

    fn exact(data: &Dataset, i: usize) -> bool {
        data.observed.as_ref().is_none_or(|o| o[i])
    }

    fn is_censored(data: &Dataset) -> bool {
        data.observed.as_ref().is_some_and(|o| o.iter().any(|t| !t))
    }

    /// Log-likelihood and its gradient in (μ, τ = log σ²).
    fn ll_grad_mu_tau(data: &Dataset, mu: f64, tau: f64) -> (f64, [f64; 2]) {
        let sd = (0.5 * tau).exp();
        let mut ll = 0.0;
        let mut g = [0.0; 2];
        for (i, &z) in data.responses.iter().enumerate() {
            if !(z > 0.0) {
                return (f64::NEG_INFINITY, [f64::NAN; 2]);
            }
            let u = (z.ln() - mu) / sd;
            if Self::exact(data, i) {
                ll += -0.5 * tau - 0.5 * u * u;
                g[0] += u / sd;
                g[1] += -0.5 + 0.5 * u * u;
            } else {
                ll += norm_log_cdf(u);
                let r = inv_mills(u);
                g[0] += -r / sd;
                g[1] += -0.5 * u * r;
            }
        }
        (ll, g)
    }
}

impl Model for LogNormal {
    fn name(&self) -> &'static str {
        "lognormal"
    }

    fn dim(&self) -> usize {
        2
    }

    fn domain(&self) -> Domain {
        match self.param {
            LogNormalParam::MeanVariance => Domain::OpenBox {
                lo: vec![f64::NEG_INFINITY, 0.0],
                hi: vec![f64::INFINITY; 2],
            },
            LogNormalParam::MeanLogVariance => Domain::Unconstrained,
        }
    }

    fn log_likelihood(&self, data: &Dataset, theta: &[f64]) -> f64 {
        if !self.in_domain(theta) {
            return f64::NEG_INFINITY;
        }
        let (mu, v) = self.mean_variance(theta);
        let ll = Self::ll_grad_mu_tau(data, mu, v.ln()).0;
        if ll.is_nan() {
            f64::NEG_INFINITY
        } else {
            ll
        }
    }

    fn sample(&self, theta: &[f64], n: usize, rng: &mut SimRng) -> Dataset {
        let (mu, v) = self.mean_variance(theta);
        let sd = v.sqrt();
        Dataset::new(
            (0..n)
                .map(|_| {
                    let z: f64 = StandardNormal.sample(rng);
                    (mu + sd * z).exp()
                })
                .collect(),
        )
    }

    fn mle(&self, data: &Dataset) -> Result<Vec<f64>> {
        let n = data.n();
        if n < 2 || data.responses.iter().any(|&z| !(z > 0.0)) {
            return Err(Error::DegenerateMle(
                "lognormal: need at least two positive observations".into(),
            ));
        }
        let logs: Vec<f64> = data.responses.iter().map(|z| z.ln()).collect();
        let exact: Vec<f64> = (0..n).filter(|&i| Self::exact(data, i)).map(|i| logs[i]).collect();
        let pool = if exact.len() >= 2 { &exact } else { &logs };
        let m = pool.iter().sum::<f64>() / pool.len() as f64;
        let v = pool.iter().map(|x| (x - m).powi(2)).sum::<f64>() / pool.len() as f64;
        if !(v > 0.0) {
            return Err(Error::DegenerateMle("lognormal: no spread in log data".into()));
        }
        if !Self::is_censored(data) {
            return Ok(self.from_mean_variance(m, v));
        }
        if exact.is_empty() {
            return Err(Error::DegenerateMle("lognormal: every observation censored".into()));
        }
        let f = |t: &[f64]| Self::ll_grad_mu_tau(data, t[0], t[1]).0;
        let g = |t: &[f64]| Self::ll_grad_mu_tau(data, t[0], t[1]).1.to_vec();
        let h = |t: &[f64]| fd_hessian_from_gradient(&g, t, 1e-6);
        let opt = newton_maximize(&f, &g, &h, &[m, v.ln()], NewtonOptions::default());
        if !opt.converged || opt.x[1] < -50.0 {
            return Err(Error::NonConvergence("lognormal censored MLE".into()));
        }
        Ok(self.from_mean_variance(opt.x[0], opt.x[1].exp()))
    }

    fn score(&self, data: &Dataset, theta: &[f64]) -> Vec<f64> {
        let (mu, v) = self.mean_variance(theta);
        let (_, g) = Self::ll_grad_mu_tau(data, mu, v.ln());
        match self.param {
            LogNormalParam::MeanLogVariance => g.to_vec(),
            LogNormalParam::MeanVariance => vec![g[0], g[1] / v],
        }
    }

    fn analytic_information(&self, data: &Dataset, theta: &[f64]) -> Option<DMatrix<f64>> {
        if Self::is_censored(data) {
            return None;
        }
        let (mu, v) = self.mean_variance(theta);
        let n = data.n() as f64;
        let s1: f64 = data.responses.iter().map(|z| z.ln() - mu).sum();
        let s2: f64 = data.responses.iter().map(|z| (z.ln() - mu).powi(2)).sum();
        // Hessian in (μ, v)
        let hmm = -n / v;
        let hmv = -s1 / (v * v);
        let hvv = n / (2.0 * v * v) - s2 / v.powi(3);
        let h = match self.param {
            LogNormalParam::MeanVariance => [hmm, hmv, hmv, hvv],
            LogNormalParam::MeanLogVariance => {
                let gv = -n / (2.0 * v) + s2 / (2.0 * v * v);
                [hmm, v * hmv, v * hmv, v * gv + v * v * hvv]
            }
        };
        Some(-DMatrix::from_row_slice(2, 2, &h))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{fd_information, mle_and_information, relative_likelihood};
    use crate::rng::stream;

    fn censored_data() -> Dataset {
        let m = LogNormal::new(LogNormalParam::MeanVariance);
        let d = m.sample(&[0.0, 1.0], 24, &mut stream(3, &[]));
        let obs: Vec<bool> = d.responses.iter().map(|&z| z > 1.0).collect();
        let z = d.responses.iter().map(|&z| z.max(1.0)).collect();
        Dataset::new(z).with_observed(obs).unwrap()
    }

    #[test]
    fn uncensored_closed_form() {
        let m = LogNormal::new(LogNormalParam::MeanLogVariance);
        let d = m.sample(&[1.0, 0.0], 40, &mut stream(2, &[]));
        let (t, j) = mle_and_information(&m, &d).unwrap();
        assert!(m.score(&d, &t.values).iter().all(|g| g.abs() < 1e-9));
        let fd = fd_information(&m, &d, &t.values);
        assert!((&fd - &j).amax() < 1e-4 * j.amax());
        let mv = LogNormal::new(LogNormalParam::MeanVariance);
        let th = [0.7, 1.4];
        let j = mv.analytic_information(&d, &th).unwrap();
        assert!((fd_information(&mv, &d, &th) - &j).amax() < 1e-4 * j.amax());
    }

    #[test]
    fn censored_mle_is_stationary_and_maximal() {
        let d = censored_data();
        let m = LogNormal::new(LogNormalParam::MeanLogVariance);
        let t = m.mle(&d).unwrap();
        assert!(m.score(&d, &t).iter().all(|g| g.abs() < 1e-6), "{:?}", m.score(&d, &t));
        let best = m.log_likelihood(&d, &t);
        for i in -10..=10 {
            for j in -10..=10 {
                let p = [t[0] + 0.05 * i as f64, t[1] + 0.05 * j as f64];
                assert!(m.log_likelihood(&d, &p) <= best + 1e-9);
            }
        }
        assert_eq!(relative_likelihood(&m, &d, &t).unwrap().value, 1.0);
    }

    #[test]
    fn censored_score_matches_finite_difference() {
        let d = censored_data();
        let m = LogNormal::new(LogNormalParam::MeanVariance);
        let th = [0.3, 0.8];
        let g = m.score(&d, &th);
        for i in 0..2 {
            let h = 1e-6;
            let mut a = th;
            let mut b = th;
            a[i] += h;
            b[i] -= h;
            let fd = (m.log_likelihood(&d, &a) - m.log_likelihood(&d, &b)) / (2.0 * h);
            assert!((fd - g[i]).abs() < 1e-5 * (1.0 + g[i].abs()));
        }
    }
}

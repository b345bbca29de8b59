use std::sync::Arc;

use nalgebra::DMatrix;
use rand::Rng;

use crate::contour::{ContourKind, Evaluation, PossibilityContour, TIE_TOLERANCE};
use crate::error::{Error, Result};
use crate::family::GaussianScalarFamily;
use crate::model::Anchor;
use crate::rng::stream;
use crate::special::norm_pdf;

pub type LossFn = Arc<dyn Fn(f64, &[f64]) -> f64 + Send + Sync>;
pub type Minimizer = Arc<dyn Fn(&[f64]) -> Result<Vec<f64>> + Send + Sync>;

/// Loss (x, θ) ↦ loss_θ(x), its empirical-risk minimizer and the number of
/// bootstrap replicates.
#[derive(Clone)]
pub struct RiskSpec {
    pub loss: LossFn,
    pub minimizer: Minimizer,
    pub bootstrap: usize,
}

impl std::fmt::Debug for RiskSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("RiskSpec")
            .field("bootstrap", &self.bootstrap)
            .finish_non_exhaustive()
    }
}

/// Check loss ρ_τ(u) = u(τ − 1{u < 0}).
pub fn check_loss(tau: f64, u: f64) -> f64 {
    u * (tau - if u < 0.0 { 1.0 } else { 0.0 })
}

/// The ⌈nτ⌉-th order statistic, a minimizer of the empirical check risk.
pub fn sample_quantile(xs: &[f64], tau: f64) -> Result<f64> {
    if xs.is_empty() || xs.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidInput("sample quantile needs finite data".into()));
    }
    let mut v = xs.to_vec();
    let k = ((xs.len() as f64 * tau).ceil() as usize).clamp(1, xs.len());
    let (_, q, _) = v.select_nth_unstable_by(k - 1, f64::total_cmp);
    Ok(*q)
}

impl RiskSpec {
    pub fn new(
        loss: impl Fn(f64, &[f64]) -> f64 + Send + Sync + 'static,
        minimizer: impl Fn(&[f64]) -> Result<Vec<f64>> + Send + Sync + 'static,
    ) -> Self {
        Self {
            loss: Arc::new(loss),
            minimizer: Arc::new(minimizer),
            bootstrap: 500,
        }
    }

    /// τ-quantile via the check loss.
    pub fn quantile(tau: f64) -> Result<Self> {
        if !(tau > 0.0 && tau < 1.0) {
            return Err(Error::InvalidInput(format!("quantile level {tau} outside (0, 1)")));
        }
        Ok(Self::new(
            move |x, t| check_loss(tau, x - t[0]),
            move |xs| Ok(vec![sample_quantile(xs, tau)?]),
        ))
    }

    pub fn with_bootstrap(mut self, b: usize) -> Self {
        self.bootstrap = b;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.bootstrap == 0 {
            return Err(Error::InvalidInput(
                "bootstrap replicate count must be at least 1".into(),
            ));
        }
        Ok(())
    }

    /// ρ̂(θ) = mean loss.
    pub fn empirical_risk(&self, xs: &[f64], theta: &[f64]) -> f64 {
        xs.iter().map(|&x| (self.loss)(x, theta)).sum::<f64>() / xs.len() as f64
    }
}

/// Bootstrap contour for the risk minimizer.
///
/// log R^er(x, θ) = −{ρ̂_x(θ) − ρ̂_x(θ̂_x)} is compared with its bootstrap
/// analogue centered at the plug-in truth, −{ρ̂_{X*}(θ̂_x) − ρ̂_{X*}(θ̂_{X*})},
/// with X* resampled from x. The B resamples are drawn once, at
/// construction, so the contour is a deterministic function of θ.
pub struct EmpiricalRiskContour {
    pub data: Vec<f64>,
    pub spec: RiskSpec,
    theta_hat: Vec<f64>,
    risk_hat: f64,
    /// Sorted bootstrap statistics.
    stats: Vec<f64>,
    /// Resamples whose minimization failed; they count as ties.
    failed: usize,
}

impl EmpiricalRiskContour {
    /// Replicate b resamples with `stream(seed, [b])`.
    pub fn new(data: Vec<f64>, spec: RiskSpec, seed: u64) -> Result<Self> {
        spec.validate()?;
        if data.is_empty() {
            return Err(Error::InvalidInput("empty data".into()));
        }
        let theta_hat = (spec.minimizer)(&data)?;
        let risk_hat = spec.empirical_risk(&data, &theta_hat);
        if !risk_hat.is_finite() {
            return Err(Error::NonConvergence(
                "empirical risk at the minimizer is not finite".into(),
            ));
        }
        let n = data.len();
        let draws: Vec<Option<f64>> = (0..spec.bootstrap)
            .map(|b| {
                let mut rng = stream(seed, &[b as u64]);
                let xb: Vec<f64> = (0..n).map(|_| data[rng.random_range(0..n)]).collect();
                let tb = (spec.minimizer)(&xb).ok()?;
                let v = spec.empirical_risk(&xb, &tb) - spec.empirical_risk(&xb, &theta_hat);
                v.is_finite().then_some(v.min(0.0))
            })
            .collect();
        let failed = draws.iter().filter(|d| d.is_none()).count();
        let mut stats: Vec<f64> = draws.into_iter().flatten().collect();
        stats.sort_by(f64::total_cmp);
        Ok(Self {
            data,
            spec,
            theta_hat,
            risk_hat,
            stats,
            failed,
        })
    }

    pub fn theta_hat(&self) -> &[f64] {
        &self.theta_hat
    }

    /// Sorted bootstrap statistics.
    pub fn bootstrap_statistics(&self) -> &[f64] {
        &self.stats
    }

    fn log_r(&self, theta: &[f64]) -> Option<f64> {
        let r = self.spec.empirical_risk(&self.data, theta);
        r.is_finite().then(|| (self.risk_hat - r).min(0.0))
    }
}

impl PossibilityContour for EmpiricalRiskContour {
    fn dim(&self) -> usize {
        self.theta_hat.len()
    }

    fn kind(&self) -> ContourKind {
        ContourKind::Bootstrap
    }

    fn evaluate(&self, theta: &[f64], _seed: u64) -> Evaluation {
        if theta.len() != self.dim() {
            return Evaluation::domain_violation();
        }
        let Some(obs) = self.log_r(theta) else {
            return Evaluation::domain_violation();
        };
        let hits = self.stats.partition_point(|&v| v <= obs + TIE_TOLERANCE) + self.failed;
        Evaluation::ok(hits as f64 / self.spec.bootstrap as f64)
    }

    fn mode(&self) -> Option<Vec<f64>> {
        Some(self.theta_hat.clone())
    }

    fn monte_carlo_size(&self) -> Option<usize> {
        Some(self.spec.bootstrap)
    }
}

/// One-shot bootstrap contour evaluation.
pub fn empirical_risk_contour(data: &[f64], spec: &RiskSpec, theta: &[f64], seed: u64) -> Result<Evaluation> {
    Ok(EmpiricalRiskContour::new(data.to_vec(), spec.clone(), seed)?.evaluate(theta, 0))
}

/// Normal-reference bandwidth 1.06·sd·n^{−1/5}.
pub fn kde_bandwidth(xs: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let sd = (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
    1.06 * sd * n.powf(-0.2)
}

/// Gaussian-kernel density estimate at `x`.
pub fn kde(xs: &[f64], x: f64) -> f64 {
    let h = kde_bandwidth(xs);
    xs.iter().map(|&v| norm_pdf((x - v) / h)).sum::<f64>() / (xs.len() as f64 * h)
}

/// Gaussian companion for the τ-quantile: mean θ̂, variance
/// ξ²·τ(1−τ)/{n·p̂(θ̂)²}.
pub fn quantile_family(xs: &[f64], tau: f64, xi: f64) -> Result<GaussianScalarFamily> {
    if xs.len() < 2 {
        return Err(Error::InvalidInput("need at least two observations".into()));
    }
    let q = sample_quantile(xs, tau)?;
    let p = kde(xs, q);
    if !(p > 0.0 && p.is_finite()) {
        return Err(Error::SingularInformation(format!(
            "density estimate {p} at the sample quantile"
        )));
    }
    let info = xs.len() as f64 * p * p / (tau * (1.0 - tau));
    GaussianScalarFamily::new(Anchor::new(vec![q], DMatrix::from_element(1, 1, info))?, xi)
}

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::contour::{validify, ContourKind, Evaluation, McContour, SimulatedStatistic};
use crate::error::{Error, Result};
use crate::model::{Dataset, Model};
use crate::rng::SimRng;

/// Discrete censoring-level distribution Ĝ. Masses may sum to less than
/// one; the remainder sits at the smallest support point, where reversed-time
/// product-limit estimates leave it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CensoringDistribution {
    pub support: Vec<f64>,
    pub masses: Vec<f64>,
}

impl CensoringDistribution {
    pub fn new(support: Vec<f64>, masses: Vec<f64>) -> Result<Self> {
        let g = Self { support, masses };
        g.validate()?;
        Ok(g)
    }

    /// Point mass at `c`.
    pub fn degenerate(c: f64) -> Self {
        Self {
            support: vec![c],
            masses: vec![1.0],
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.support.is_empty() || self.support.len() != self.masses.len() {
            return Err(Error::InvalidInput(
                "censoring distribution needs matching support and masses".into(),
            ));
        }
        if !self.support.windows(2).all(|w| w[0] < w[1]) || !self.support.iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidInput(
                "censoring support must be finite and increasing".into(),
            ));
        }
        let total: f64 = self.masses.iter().sum();
        if self.masses.iter().any(|&p| !(p >= 0.0)) || total > 1.0 + 1e-12 {
            return Err(Error::InvalidInput(format!("censoring masses invalid (total {total})")));
        }
        Ok(())
    }

    /// 1 − Σ masses.
    pub fn residual(&self) -> f64 {
        (1.0 - self.masses.iter().sum::<f64>()).max(0.0)
    }

    /// Ĝ(c), with the residual counted at the first support point.
    pub fn cdf(&self, c: f64) -> f64 {
        if c < self.support[0] {
            return 0.0;
        }
        let below: f64 = self
            .support
            .iter()
            .zip(&self.masses)
            .filter(|(s, _)| **s <= c)
            .map(|(_, p)| p)
            .sum();
        (self.residual() + below).min(1.0)
    }

    pub fn sample(&self, rng: &mut SimRng) -> f64 {
        let u: f64 = rng.random();
        let mut acc = self.residual();
        for (s, p) in self.support.iter().zip(&self.masses) {
            acc += p;
            if u < acc {
                return *s;
            }
        }
        *self.support.last().expect("validated")
    }
}

/// Product-limit estimate of the censoring distribution from left-censored
/// data. With Z = max(Y, C) the level C is seen exactly when t = 0, so the
/// estimator runs on (−z, 1 − t): Kaplan–Meier in reversed time with the
/// labels swapped. A tie Y = C counts as observed Y, so at a tied z the
/// t = 1 rows stay at risk. Mass left over after the smallest censored z is
/// the residual; without any censored row all mass sits at the smallest z.
pub fn kaplan_meier_swapped(z: &[f64], observed: &[bool]) -> Result<CensoringDistribution> {
    if z.is_empty() || z.len() != observed.len() || z.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput(
            "censored data must be non-empty, finite and matched".into(),
        ));
    }
    let mut rows: Vec<(f64, bool)> = z.iter().copied().zip(observed.iter().map(|t| !t)).collect();
    rows.sort_by(|a, b| b.0.total_cmp(&a.0));
    let n = rows.len();
    let mut support = Vec::new();
    let mut masses = Vec::new();
    let mut surv = 1.0;
    let mut i = 0;
    while i < n {
        let level = rows[i].0;
        let at_risk = n - i;
        let mut j = i;
        let mut events = 0;
        while j < n && rows[j].0 == level {
            events += rows[j].1 as usize;
            j += 1;
        }
        if events > 0 {
            let next = surv * (1.0 - events as f64 / at_risk as f64);
            support.push(level);
            masses.push(surv - next);
            surv = next;
        }
        i = j;
    }
    if support.is_empty() {
        return CensoringDistribution::new(vec![rows[n - 1].0], vec![1.0]);
    }
    support.reverse();
    masses.reverse();
    CensoringDistribution::new(support, masses)
}

/// log R^pr for left-censored data, with datasets simulated as Y ~ P_θ,
/// C ~ Ĝ, Z = max(Y, C), T = 1(Y ≥ C). The model must score unobserved
/// rows by their cdf.
#[derive(Debug, Clone)]
pub struct CensoredStatistic<M> {
    pub model: M,
    pub data: Dataset,
    pub ghat: CensoringDistribution,
    sup: f64,
}

impl<M: Model> CensoredStatistic<M> {
    pub fn new(model: M, data: Dataset, ghat: CensoringDistribution) -> Result<Self> {
        ghat.validate()?;
        data.validate()?;
        let sup = model
            .sup_log_likelihood(&data)
            .filter(|v| v.is_finite())
            .ok_or_else(|| {
                Error::NonConvergence(format!("{}: censored likelihood maximization failed", model.name()))
            })?;
        Ok(Self { model, data, ghat, sup })
    }

    /// Y values are drawn first, exactly as for uncensored simulation, then
    /// the censoring levels.
    pub fn simulate(&self, theta: &[f64], rng: &mut SimRng) -> Dataset {
        let y = self.model.sample(theta, self.data.n(), rng);
        let (z, t): (Vec<f64>, Vec<bool>) = y
            .responses
            .iter()
            .map(|&y| {
                let c = self.ghat.sample(rng);
                (y.max(c), y >= c)
            })
            .unzip();
        Dataset::new(z).with_observed(t).expect("lengths match")
    }
}

impl<M: Model> SimulatedStatistic for CensoredStatistic<M> {
    fn dim(&self) -> usize {
        self.model.dim()
    }

    fn observed(&self, theta: &[f64]) -> Option<f64> {
        if !self.model.in_domain(theta) {
            return None;
        }
        let ll = self.model.log_likelihood(&self.data, theta);
        ll.is_finite().then_some(ll - self.sup)
    }

    fn simulated(&self, theta: &[f64], rng: &mut SimRng) -> Option<f64> {
        let x = self.simulate(theta, rng);
        let sup = self.model.sup_log_likelihood(&x)?;
        let ll = self.model.log_likelihood(&x, theta);
        (ll.is_finite() && sup.is_finite()).then_some(ll - sup)
    }
}

pub type CensoredContour<M> = McContour<CensoredStatistic<M>>;

/// Plug-in contour θ ↦ P_{θ,Ĝ}{R^pr(X, θ) ≤ R^pr(x, θ)} with `m` datasets.
pub fn censored_plugin_contour<M: Model>(
    model: M,
    data: Dataset,
    ghat: CensoringDistribution,
    m: usize,
) -> Result<CensoredContour<M>> {
    if m == 0 {
        return Err(Error::InvalidInput("Monte Carlo size must be positive".into()));
    }
    let mode = model.mle(&data).ok();
    let stat = CensoredStatistic::new(model, data, ghat)?;
    Ok(McContour::from_statistic(stat, m, ContourKind::CensoredPlugin, mode))
}

/// One-shot evaluation of the censored plug-in contour.
pub fn censored_contour(
    model: &dyn Model,
    data: &Dataset,
    ghat: &CensoringDistribution,
    theta: &[f64],
    m: usize,
    seed: u64,
) -> Result<Evaluation> {
    let stat = CensoredStatistic::new(model, data.clone(), ghat.clone())?;
    Ok(validify(&stat, theta, m, seed))
}

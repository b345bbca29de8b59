use super::{ContourKind, Evaluation, PossibilityContour, TIE_TOLERANCE};
use crate::error::{Error, Result};
use crate::model::{Dataset, Model};
use crate::rng::{stream, SimRng};

/// A log-scale plausibility statistic T(x, θ) ≤ 0 together with a way to
/// simulate it under θ. Validification turns it into the contour
/// θ ↦ P_θ{T(X, θ) ≤ T(x, θ)}.
pub trait SimulatedStatistic: Send + Sync {
    fn dim(&self) -> usize;

    /// Observed statistic at θ; `None` when θ is outside the domain.
    fn observed(&self, theta: &[f64]) -> Option<f64>;

    /// Statistic of one dataset simulated under θ. `None` means the statistic
    /// is undefined for that dataset, which counts as a tie.
    fn simulated(&self, theta: &[f64], rng: &mut SimRng) -> Option<f64>;
}

/// Monte Carlo validification with `m` replicates. Replicate `i` draws from
/// `stream(seed, [i])`; ties (within [`TIE_TOLERANCE`]) count as hits.
pub fn validify<S: SimulatedStatistic + ?Sized>(stat: &S, theta: &[f64], m: usize, seed: u64) -> Evaluation {
    assert!(m >= 1, "Monte Carlo size must be positive");
    let Some(obs) = stat.observed(theta) else {
        return Evaluation::domain_violation();
    };
    let obs = obs.min(0.0);
    let hits = (0..m)
        .filter(|&i| {
            let mut rng = stream(seed, &[i as u64]);
            match stat.simulated(theta, &mut rng) {
                Some(v) => v.min(0.0) <= obs + TIE_TOLERANCE,
                None => true,
            }
        })
        .count();
    Evaluation::ok(hits as f64 / m as f64)
}

/// log R(x, θ) for a parametric model.
#[derive(Debug, Clone)]
pub struct RelativeLikelihoodStatistic<M> {
    pub model: M,
    pub data: Dataset,
    sup: f64,
}

impl<M: Model> RelativeLikelihoodStatistic<M> {
    pub fn new(model: M, data: Dataset) -> Result<Self> {
        let sup = model
            .sup_log_likelihood(&data)
            .filter(|v| v.is_finite())
            .ok_or_else(|| Error::NonConvergence(format!("{}: likelihood maximization failed", model.name())))?;
        Ok(Self { model, data, sup })
    }
}

impl<M: Model> SimulatedStatistic for RelativeLikelihoodStatistic<M> {
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
        let x = self.model.sample(theta, self.data.n(), rng);
        let sup = self.model.sup_log_likelihood(&x)?;
        let ll = self.model.log_likelihood(&x, theta);
        (ll.is_finite() && sup.is_finite()).then_some(ll - sup)
    }
}

/// Naive Monte Carlo contour: (1/M) Σ_m 1{T(X_m, θ) ≤ T(x, θ)}.
#[derive(Debug, Clone)]
pub struct McContour<S> {
    pub statistic: S,
    pub m: usize,
    kind: ContourKind,
    mode: Option<Vec<f64>>,
}

impl<S: SimulatedStatistic> McContour<S> {
    pub fn from_statistic(statistic: S, m: usize, kind: ContourKind, mode: Option<Vec<f64>>) -> Self {
        assert!(m >= 1);
        Self {
            statistic,
            m,
            kind,
            mode,
        }
    }
}

impl<M: Model> McContour<RelativeLikelihoodStatistic<M>> {
    /// Contour of the relative likelihood of `model` given `data`.
    pub fn new(model: M, data: Dataset, m: usize) -> Result<Self> {
        let mode = model.mle(&data).ok();
        let stat = RelativeLikelihoodStatistic::new(model, data)?;
        Ok(Self::from_statistic(stat, m, ContourKind::MonteCarlo, mode))
    }
}

impl<S: SimulatedStatistic> PossibilityContour for McContour<S> {
    fn dim(&self) -> usize {
        self.statistic.dim()
    }

    fn kind(&self) -> ContourKind {
        self.kind
    }

    fn evaluate(&self, theta: &[f64], seed: u64) -> Evaluation {
        if theta.len() != self.dim() {
            return Evaluation::domain_violation();
        }
        validify(&self.statistic, theta, self.m, seed)
    }

    fn mode(&self) -> Option<Vec<f64>> {
        self.mode.clone()
    }

    fn monte_carlo_size(&self) -> Option<usize> {
        Some(self.m)
    }
}

/// One-shot naive Monte Carlo evaluation of the contour at θ.
pub fn mc_contour(model: &dyn Model, data: &Dataset, theta: &[f64], m: usize, seed: u64) -> Result<Evaluation> {
    let stat = RelativeLikelihoodStatistic::new(model, data.clone())?;
    Ok(validify(&stat, theta, m, seed))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::contour::exact_binomial_contour;
    use crate::model::{Bernoulli, BivariateCorrelation};

    #[test]
    fn matches_exact_binomial() {
        let data = Bernoulli::dataset(15, 6);
        let m = 2000;
        for (i, theta) in [0.1, 0.25, 0.55, 0.7].into_iter().enumerate() {
            let exact = exact_binomial_contour(15, 6, theta);
            let mc = mc_contour(&Bernoulli, &data, &[theta], m, i as u64).unwrap().value;
            let se = (exact * (1.0 - exact) / m as f64).sqrt();
            assert!((mc - exact).abs() <= 3.0 * se + 1e-12, "θ={theta}: {mc} vs {exact}");
        }
    }

    #[test]
    fn equals_one_at_mle_and_is_deterministic() {
        let model = BivariateCorrelation;
        let data = model.sample(&[0.5], 50, &mut stream(1, &[]));
        let c = McContour::new(model, data, 200).unwrap();
        let mode = c.mode().unwrap();
        assert_eq!(c.evaluate(&mode, 9).value, 1.0);
        assert_eq!(c.evaluate(&[0.2], 4), c.evaluate(&[0.2], 4));
        assert_eq!(
            c.evaluate(&[1.5], 4).status,
            crate::contour::EvalStatus::DomainViolation
        );
    }

    #[test]
    fn strict_tie_rule_differs_by_at_most_tie_mass() {
        // discrete model: P{R(X) < R(x)} ≤ P{R(X) ≤ R(x)} ≤ P{R(X) < R(x)} + P{R(X) = R(x)}
        let data = Bernoulli::dataset(15, 6);
        let stat = RelativeLikelihoodStatistic::new(Bernoulli, data).unwrap();
        let theta = [0.3];
        let obs = stat.observed(&theta).unwrap();
        let m = 4000;
        let (mut le, mut lt, mut eq) = (0, 0, 0);
        for i in 0..m {
            let v = stat.simulated(&theta, &mut stream(5, &[i])).unwrap();
            if v <= obs + TIE_TOLERANCE {
                le += 1;
            }
            if v < obs - TIE_TOLERANCE {
                lt += 1;
            }
            if (v - obs).abs() <= TIE_TOLERANCE {
                eq += 1;
            }
        }
        assert_eq!(validify(&stat, &theta, m as usize, 5).value, le as f64 / m as f64);
        assert!(lt <= le && le - lt <= eq);
    }
}

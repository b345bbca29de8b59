use std::sync::Arc;

use nalgebra::DVector;
use rayon::prelude::*;

use super::search::{pattern_search, spread, Proposal, SearchBudget};
use crate::contour::PossibilityContour;
use crate::error::{Error, Result};
use crate::family::VariationalFamily;
use crate::special::chi2_quantile;

/// Inner suprema above this magnitude are treated as divergence.
pub const OVERFLOW_GUARD: f64 = 1e100;

pub type Loss = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

#[derive(Clone)]
pub struct ChoquetSpec {
    pub loss: Loss,
    /// Number of midpoint levels on (0, 1).
    pub levels: usize,
    pub budget: SearchBudget,
}

impl std::fmt::Debug for ChoquetSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ChoquetSpec")
            .field("levels", &self.levels)
            .field("budget", &self.budget)
            .finish_non_exhaustive()
    }
}

impl ChoquetSpec {
    pub fn new(loss: impl Fn(&[f64]) -> f64 + Send + Sync + 'static) -> Self {
        Self {
            loss: Arc::new(loss),
            levels: 200,
            budget: SearchBudget::default(),
        }
    }

    pub fn with_levels(mut self, levels: usize) -> Self {
        self.levels = levels;
        self
    }

    pub fn with_budget(mut self, budget: SearchBudget) -> Self {
        self.budget = budget;
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChoquetResult {
    pub value: f64,
    /// (s, sup{ℓ(θ): π(θ) > s}) at each level.
    pub levels: Vec<(f64, f64)>,
    pub budget: SearchBudget,
}

/// Upper expectation ∫₀¹ sup{ℓ(θ): π(θ) > s} ds by the midpoint rule.
///
/// The candidate pool (proposal draws plus the mode) is scored once; each
/// level takes the best admissible candidate and refines it by pattern
/// search. Gaussian contours also contribute points just inside each level
/// set's ellipsoid boundary, where suprema of convex losses live.
pub fn choquet_upper_expectation(
    contour: &dyn PossibilityContour,
    spec: &ChoquetSpec,
    proposal: Option<&dyn VariationalFamily>,
) -> Result<ChoquetResult> {
    if spec.levels < 2 {
        return Err(Error::InvalidInput("Choquet integral needs at least 2 levels".into()));
    }
    let budget = spec.budget;
    let d = contour.dim();
    let loss = spec.loss.as_ref();
    let sampler = Proposal::new(contour, proposal)?;
    let mode = contour.mode();
    let mut pool = sampler.candidates(budget.candidates, mode.as_deref().unwrap_or(&[]), budget.seed);
    if let Some(m) = &mode {
        pool.push(m.clone());
    }
    let step = spread(&pool, d);
    let mut scored: Vec<(Vec<f64>, f64, f64)> = pool
        .into_par_iter()
        .filter_map(|p| {
            let e = contour.evaluate(&p, budget.seed);
            (e.is_ok() || mode.as_ref() == Some(&p)).then(|| {
                let l = loss(&p);
                (p, e.value, l)
            })
        })
        .collect();
    scored.extend(push_frontier(contour, loss, &scored, &step, &budget));

    // whitened directions for the ellipsoid boundary
    let ellipsoid = contour.gaussian_form().and_then(|form| {
        let chol = form.precision.clone().cholesky()?;
        let l = chol.l();
        let mean = DVector::from_column_slice(&form.mean);
        let mut dirs: Vec<DVector<f64>> = Vec::new();
        for i in 0..d {
            for sign in [1.0, -1.0] {
                let mut e = DVector::zeros(d);
                e[i] = sign;
                dirs.push(e);
            }
        }
        for (p, _, _) in scored.iter().take(200) {
            let u = l.transpose() * (DVector::from_column_slice(p) - &mean);
            let n = u.norm();
            if n > 0.0 {
                dirs.push(u / n);
            }
        }
        // θ = m + r L⁻ᵀ u has quadratic form r²
        let lt = l.transpose();
        let points: Vec<DVector<f64>> = dirs
            .iter()
            .filter_map(|u| lt.clone().solve_upper_triangular(u))
            .collect();
        Some((mean, points))
    });

    let n = spec.levels;
    let mut sups: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|j| {
            let s = (j as f64 + 0.5) / n as f64;
            let admissible = |x: &[f64]| {
                let e = contour.evaluate(x, budget.seed);
                (e.is_ok() && e.value > s).then(|| loss(x))
            };
            let mut best: Option<(Vec<f64>, f64)> = None;
            let mut consider = |x: Vec<f64>, l: f64| {
                if l.is_finite() && best.as_ref().is_none_or(|b| l > b.1) || best.is_none() {
                    best = Some((x, l));
                }
            };
            for (p, pi, l) in &scored {
                if *pi > s || mode.as_ref() == Some(p) {
                    consider(p.clone(), *l);
                }
            }
            if let Some((mean, points)) = &ellipsoid {
                let r = chi2_quantile(d, 1.0 - s).sqrt() * (1.0 - 1e-12);
                for w in points {
                    let x: Vec<f64> = (mean + w * r).iter().copied().collect();
                    let l = loss(&x);
                    consider(x, l);
                }
            }
            match best {
                None => f64::NEG_INFINITY,
                Some((x, l)) => {
                    let (_, l, _) = pattern_search(x, l, step.clone(), budget.refine_steps, &admissible);
                    l
                }
            }
        })
        .collect();

    // the level sets are nested, so the integrand is nonincreasing in s
    for j in (0..n.saturating_sub(1)).rev() {
        sups[j] = sups[j].max(sups[j + 1]);
    }
    if let Some(bad) = sups.iter().find(|v| !v.is_finite() || v.abs() > OVERFLOW_GUARD) {
        return Err(Error::UnboundedLoss(*bad));
    }
    let value = sups.iter().sum::<f64>() / n as f64;
    let levels = sups
        .into_iter()
        .enumerate()
        .map(|(j, v)| ((j as f64 + 0.5) / n as f64, v))
        .collect();
    Ok(ChoquetResult { value, levels, budget })
}

/// Pushes points on the (π, ℓ) Pareto frontier of the pool towards higher
/// plausibility while keeping their loss, which sharpens the integrand for
/// losses that are flat in places (indicators, for instance).
fn push_frontier(
    contour: &dyn PossibilityContour,
    loss: &(dyn Fn(&[f64]) -> f64 + Send + Sync),
    scored: &[(Vec<f64>, f64, f64)],
    step: &[f64],
    budget: &SearchBudget,
) -> Vec<(Vec<f64>, f64, f64)> {
    let mut order: Vec<&(Vec<f64>, f64, f64)> = scored.iter().filter(|p| p.2.is_finite()).collect();
    order.sort_by(|a, b| b.1.total_cmp(&a.1));
    let mut frontier = Vec::new();
    let mut top = f64::NEG_INFINITY;
    for p in order {
        if p.2 > top {
            top = p.2;
            frontier.push(p);
        }
    }
    let keep = 20.min(frontier.len());
    let picked: Vec<_> = (0..keep).map(|i| frontier[i * frontier.len() / keep]).collect();
    picked
        .into_par_iter()
        .map(|(x, pi, l)| {
            let objective = |y: &[f64]| {
                let e = contour.evaluate(y, budget.seed);
                (e.is_ok() && loss(y) >= *l).then_some(e.value)
            };
            let (y, pi, _) = pattern_search(x.clone(), *pi, step.to_vec(), budget.refine_steps, &objective);
            let ly = loss(&y);
            (y, pi, ly)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use nalgebra::DMatrix;
    use proptest::prelude::*;

    use super::*;
    use crate::contour::{ContourKind, Evaluation};
    use crate::family::GaussianScalarFamily;
    use crate::inference::{upper_probability, Hypothesis};
    use crate::model::Anchor;

    fn standard(d: usize) -> GaussianScalarFamily {
        GaussianScalarFamily::new(Anchor::new(vec![0.0; d], DMatrix::identity(d, d)).unwrap(), 1.0).unwrap()
    }

    struct Opaque(GaussianScalarFamily);

    impl PossibilityContour for Opaque {
        fn dim(&self) -> usize {
            self.0.dim()
        }
        fn kind(&self) -> ContourKind {
            ContourKind::MonteCarlo
        }
        fn evaluate(&self, theta: &[f64], seed: u64) -> Evaluation {
            self.0.evaluate(theta, seed)
        }
        fn mode(&self) -> Option<Vec<f64>> {
            self.0.mode()
        }
    }

    #[test]
    fn constant_loss() {
        let r = choquet_upper_expectation(&standard(2), &ChoquetSpec::new(|_| 3.7), None).unwrap();
        assert!((r.value - 3.7).abs() < 3.7e-6);
    }

    #[test]
    fn absolute_value_matches_quadrature() {
        let r = choquet_upper_expectation(&standard(1), &ChoquetSpec::new(|t| t[0].abs()), None).unwrap();
        assert!(
            (r.value - (2.0 / std::f64::consts::PI).sqrt()).abs() < 1e-3,
            "{}",
            r.value
        );
    }

    #[test]
    fn indicator_is_capacity() {
        let f = GaussianScalarFamily::new(
            Anchor::new(vec![0.3, -0.2], DMatrix::from_row_slice(2, 2, &[1.5, 0.4, 0.4, 0.8])).unwrap(),
            1.0,
        )
        .unwrap();
        let h = Hypothesis::HalfSpace {
            a: vec![1.0, 1.0],
            b: 1.2,
        };
        let upper = upper_probability(&f, &h, &SearchBudget::default(), None).unwrap().value;
        let hh = h.clone();
        let spec = ChoquetSpec::new(move |t| if hh.contains(t) { 1.0 } else { 0.0 });
        let r = choquet_upper_expectation(&f, &spec, None).unwrap();
        assert!((r.value - upper).abs() <= 1.0 / 200.0, "{} vs {upper}", r.value);
        let r2 = choquet_upper_expectation(&Opaque(f.clone()), &spec, Some(&f)).unwrap();
        assert!(
            (r2.value - upper).abs() <= 1.0 / 200.0 + 1e-3,
            "{} vs {upper}",
            r2.value
        );
    }

    #[test]
    fn unbounded_loss_rejected() {
        let spec = ChoquetSpec::new(|t| (t[0] * 1e3).exp());
        assert!(matches!(
            choquet_upper_expectation(&standard(1), &spec, None),
            Err(Error::UnboundedLoss(_))
        ));
        assert!(choquet_upper_expectation(&standard(1), &ChoquetSpec::new(|_| 1.0).with_levels(1), None).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(12))]
        #[test]
        fn monotone_in_loss(a in -1.0f64..1.0, b in -1.0f64..1.0, c in 0.0f64..2.0) {
            let f = standard(2);
            let budget = SearchBudget { candidates: 300, refine_steps: 20, seed: 3 };
            let lo = ChoquetSpec::new(move |t| a * t[0] + b * t[1]).with_budget(budget).with_levels(50);
            let hi = ChoquetSpec::new(move |t| a * t[0] + b * t[1] + c * t[0].abs()).with_budget(budget).with_levels(50);
            let r_lo = choquet_upper_expectation(&f, &lo, None).unwrap().value;
            let r_hi = choquet_upper_expectation(&f, &hi, None).unwrap().value;
            prop_assert!(r_lo <= r_hi + 1e-9);
        }
    }
}

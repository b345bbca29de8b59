//! Robbins–Monro fitting of the family index ξ.
//!
//! The scalar fit matches the credal mass of the α-cut with one ξ; the
//! vector fit matches the contour at the 2d credible-ellipsoid boundary
//! points with one ξ per eigen-direction.

mod trace;

pub use trace::{FitTrace, Termination, TraceRecord};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::contour::{EvalStatus, PossibilityContour};
use crate::error::{Error, Result};
use crate::family::{GaussianScalarFamily, GaussianVectorFamily, ScalarIndexed, VariationalFamily};
use crate::model::{anchor, Dataset, Model};
use crate::rng::{derive_seed, stream};

/// Smallest admissible ξ component.
pub const XI_FLOOR: f64 = 1e-6;

/// w_t = scale / (offset + t)^power.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepSchedule {
    pub scale: f64,
    pub offset: f64,
    pub power: f64,
}

impl Default for StepSchedule {
    fn default() -> Self {
        Self {
            scale: 2.0,
            offset: 1.0,
            power: 1.0,
        }
    }
}

impl StepSchedule {
    pub fn weight(&self, t: usize) -> f64 {
        self.scale / (self.offset + t as f64).powf(self.power)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SAConfig {
    pub alpha: f64,
    pub steps: StepSchedule,
    /// Draws from Q^ξ per scalar-fit iteration.
    pub k_outer: usize,
    /// Monte Carlo datasets per contour evaluation.
    pub m_inner: usize,
    pub epsilon: f64,
    pub min_iter: usize,
    pub max_iter: usize,
    pub seed: u64,
    pub xi0: f64,
}

impl Default for SAConfig {
    fn default() -> Self {
        Self {
            alpha: 0.1,
            steps: StepSchedule::default(),
            k_outer: 200,
            m_inner: 500,
            epsilon: 0.005,
            min_iter: 5,
            max_iter: 500,
            seed: 0,
            xi0: 1.0,
        }
    }
}

impl SAConfig {
    pub fn with_seed(seed: u64) -> Self {
        Self {
            seed,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.to_string()));
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return bad("alpha must lie in (0,1)");
        }
        if !(self.epsilon > 0.0) {
            return bad("epsilon must be positive");
        }
        if self.k_outer == 0 || self.m_inner == 0 {
            return bad("Monte Carlo sizes must be positive");
        }
        if self.max_iter == 0 || self.min_iter > self.max_iter {
            return bad("need 0 < min_iter <= max_iter");
        }
        if !(self.xi0 > 0.0 && self.xi0.is_finite()) {
            return bad("xi0 must be positive");
        }
        let s = self.steps;
        if !(s.scale > 0.0 && s.offset > 0.0 && s.power > 0.5 && s.power <= 1.0) {
            return bad("step schedule needs scale, offset > 0 and power in (1/2, 1]");
        }
        Ok(())
    }
}

/// Monte Carlo estimate of the credal-mass objective, with the number of
/// contour evaluations that failed (counted as outside the cut).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Objective {
    pub value: f64,
    pub failures: usize,
}

/// f̂_α(ξ) = (1/K) Σ_k 1{π(Θ_k) > α} − (1−α), Θ_k iid from the family.
///
/// Draw k uses `stream(seed, [k])`; its contour evaluation uses
/// `hash(seed, k, 1)`.
pub fn f_hat<F: VariationalFamily + ?Sized>(
    family: &F,
    contour: &dyn PossibilityContour,
    alpha: f64,
    k: usize,
    seed: u64,
) -> Objective {
    assert!(k >= 1);
    let (inside, failures) = (0..k)
        .into_par_iter()
        .map(|i| {
            let theta = family.sample_one(&mut stream(seed, &[i as u64]));
            let e = contour.evaluate(&theta, derive_seed(seed, &[i as u64, 1]));
            match e.status {
                EvalStatus::Failed => (0, 1),
                _ => (usize::from(e.value > alpha), 0),
            }
        })
        .reduce(|| (0, 0), |a, b| (a.0 + b.0, a.1 + b.1));
    Objective {
        value: inside as f64 / k as f64 - (1.0 - alpha),
        failures,
    }
}

/// ĝ_{α,s}(ξ) = max{π(ϑ_s^+), π(ϑ_s^−)} − α for s = 1..d, and the failure count.
pub fn g_hat(
    family: &GaussianVectorFamily,
    contour: &dyn PossibilityContour,
    alpha: f64,
    seed: u64,
) -> Result<(Vec<f64>, usize)> {
    let points = family.boundary_points(alpha)?;
    let evals: Vec<_> = points
        .par_iter()
        .enumerate()
        .map(|(s, (plus, minus))| {
            let a = contour.evaluate(plus, derive_seed(seed, &[s as u64, 0]));
            let b = contour.evaluate(minus, derive_seed(seed, &[s as u64, 1]));
            let failed = usize::from(a.status == EvalStatus::Failed) + usize::from(b.status == EvalStatus::Failed);
            (a.value.max(b.value) - alpha, failed)
        })
        .collect();
    Ok((evals.iter().map(|e| e.0).collect(), evals.iter().map(|e| e.1).sum()))
}

/// Robbins–Monro: ξ^{(t+1)} = ξ^{(t)} + sign·w_{t+1}·objective(t, ξ^{(t)}),
/// clamped at [`XI_FLOOR`]. Stops once max_s |Δξ_s| < ε after at least
/// `min_iter` iterations, or after `max_iter`.
///
/// The objective returns its estimate and a count of failed evaluations.
pub fn robbins_monro<G>(mut objective: G, config: &SAConfig, sign: f64, xi0: Vec<f64>) -> FitTrace
where
    G: FnMut(usize, &[f64]) -> (Vec<f64>, usize),
{
    let mut xi = xi0;
    let mut records = Vec::new();
    let mut failures = 0;
    let mut termination = Termination::MaxIterations;
    for t in 0..config.max_iter {
        let (g, failed) = objective(t, &xi);
        failures += failed;
        let w = config.steps.weight(t + 1);
        let next: Vec<f64> = xi
            .iter()
            .zip(&g)
            .map(|(x, gi)| (x + sign * w * gi).max(XI_FLOOR))
            .collect();
        let change = xi.iter().zip(&next).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        log::info!("iteration {t}: objective {g:?}, xi {next:?}");
        records.push(TraceRecord {
            t,
            xi: xi.clone(),
            objective: g,
        });
        xi = next;
        if change < config.epsilon && t + 1 >= config.min_iter {
            termination = Termination::Converged;
            break;
        }
    }
    FitTrace {
        records,
        xi_hat: xi,
        termination,
        failures,
    }
}

/// Fit the scalar index of `family` to `contour`.
pub fn fit_scalar<F: ScalarIndexed>(
    family: &F,
    contour: &dyn PossibilityContour,
    config: &SAConfig,
) -> Result<(F, FitTrace)> {
    config.validate()?;
    let trace = robbins_monro(
        |t, xi| {
            let f = family.with_xi(xi[0]).expect("clamped ξ is positive");
            let o = f_hat(
                &f,
                contour,
                config.alpha,
                config.k_outer,
                derive_seed(config.seed, &[t as u64]),
            );
            (vec![o.value], o.failures)
        },
        config,
        1.0,
        vec![config.xi0],
    );
    Ok((family.with_xi(trace.xi_hat[0])?, trace))
}

/// Fit the eigen-direction index ξ ∈ ℝ^d.
pub fn fit_vector(
    family: &GaussianVectorFamily,
    contour: &dyn PossibilityContour,
    config: &SAConfig,
) -> Result<(GaussianVectorFamily, FitTrace)> {
    config.validate()?;
    let mut error = None;
    let trace = robbins_monro(
        |t, xi| {
            let f = family.with_xi(xi.to_vec()).expect("ξ length is fixed");
            match g_hat(&f, contour, config.alpha, derive_seed(config.seed, &[t as u64])) {
                Ok(r) => r,
                Err(e) => {
                    error.get_or_insert(e);
                    (vec![0.0; xi.len()], 0)
                }
            }
        },
        config,
        1.0,
        vec![config.xi0; family.dim()],
    );
    if let Some(e) = error {
        return Err(e);
    }
    Ok((family.with_xi(trace.xi_hat.clone())?, trace))
}

/// Scalar fit of the Gaussian family anchored at (θ̂, J) of `model`.
pub fn fit_gaussian_scalar(
    model: &dyn Model,
    data: &Dataset,
    contour: &dyn PossibilityContour,
    config: &SAConfig,
) -> Result<(GaussianScalarFamily, FitTrace)> {
    let family = GaussianScalarFamily::new(anchor(model, data)?, config.xi0)?;
    fit_scalar(&family, contour, config)
}

/// Vector fit of the Gaussian family anchored at (θ̂, J) of `model`.
pub fn fit_gaussian_vector(
    model: &dyn Model,
    data: &Dataset,
    contour: &dyn PossibilityContour,
    config: &SAConfig,
) -> Result<(GaussianVectorFamily, FitTrace)> {
    let family = GaussianVectorFamily::new(anchor(model, data)?, vec![config.xi0; model.dim()])?;
    fit_vector(&family, contour, config)
}

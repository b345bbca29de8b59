//! Possibility contours: exact, Monte Carlo and closed form, plus grids.

mod exact;
mod grid;
mod monte_carlo;

pub use exact::{binomial_log_relative, exact_binomial_contour, ExactBinomialContour};
pub use grid::{alpha_cut, grid_eval, AxisSpec, ContourGrid};
pub use monte_carlo::{mc_contour, validify, McContour, RelativeLikelihoodStatistic, SimulatedStatistic};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

/// Slack used when comparing log relative likelihoods, so that ties that are
/// equal in exact arithmetic stay ties in floating point.
pub const TIE_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ContourKind {
    ExactDiscrete,
    MonteCarlo,
    ClosedFormGaussian,
    DirichletMc,
    Profile,
    Bootstrap,
    CensoredPlugin,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EvalStatus {
    Ok,
    /// θ outside the model domain or with non-finite likelihood; value is 0.
    DomainViolation,
    /// Evaluation failed numerically; value is 0.
    Failed,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Evaluation {
    pub value: f64,
    pub status: EvalStatus,
}

impl Evaluation {
    pub fn ok(value: f64) -> Self {
        Self {
            value: value.clamp(0.0, 1.0),
            status: EvalStatus::Ok,
        }
    }

    pub fn domain_violation() -> Self {
        Self {
            value: 0.0,
            status: EvalStatus::DomainViolation,
        }
    }

    pub fn failed() -> Self {
        Self {
            value: 0.0,
            status: EvalStatus::Failed,
        }
    }

    pub fn is_ok(&self) -> bool {
        self.status == EvalStatus::Ok
    }
}

/// Closed-form Gaussian contour θ ↦ 1 − G_d{(θ−m)ᵀA(θ−m)}.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianForm {
    pub mean: Vec<f64>,
    pub precision: DMatrix<f64>,
}

/// A map θ ↦ π(θ) ∈ [0,1].
///
/// `seed` drives any Monte Carlo inside the evaluation; deterministic
/// contours ignore it.
pub trait PossibilityContour: Send + Sync {
    fn dim(&self) -> usize;
    fn kind(&self) -> ContourKind;
    fn evaluate(&self, theta: &[f64], seed: u64) -> Evaluation;

    /// Point where the contour equals one, when known.
    fn mode(&self) -> Option<Vec<f64>> {
        None
    }

    /// Monte Carlo size per evaluation, if any.
    fn monte_carlo_size(&self) -> Option<usize> {
        None
    }

    fn gaussian_form(&self) -> Option<GaussianForm> {
        None
    }
}

impl<T: PossibilityContour + ?Sized> PossibilityContour for &T {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn kind(&self) -> ContourKind {
        (**self).kind()
    }
    fn evaluate(&self, theta: &[f64], seed: u64) -> Evaluation {
        (**self).evaluate(theta, seed)
    }
    fn mode(&self) -> Option<Vec<f64>> {
        (**self).mode()
    }
    fn monte_carlo_size(&self) -> Option<usize> {
        (**self).monte_carlo_size()
    }
    fn gaussian_form(&self) -> Option<GaussianForm> {
        (**self).gaussian_form()
    }
}

impl<T: PossibilityContour + ?Sized> PossibilityContour for Box<T> {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn kind(&self) -> ContourKind {
        (**self).kind()
    }
    fn evaluate(&self, theta: &[f64], seed: u64) -> Evaluation {
        (**self).evaluate(theta, seed)
    }
    fn mode(&self) -> Option<Vec<f64>> {
        (**self).mode()
    }
    fn monte_carlo_size(&self) -> Option<usize> {
        (**self).monte_carlo_size()
    }
    fn gaussian_form(&self) -> Option<GaussianForm> {
        (**self).gaussian_form()
    }
}

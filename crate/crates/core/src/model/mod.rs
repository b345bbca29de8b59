//! Statistical models: log-likelihood, sampler, maximum-likelihood estimate
//! and observed Fisher information.

mod binomial;
mod bivariate;
mod dataset;
mod gamma;
mod lognormal;
mod multinomial;
mod normal_means;
mod regression;
mod spec;

pub use binomial::Bernoulli;
pub use bivariate::BivariateCorrelation;
pub use dataset::{ColumnRoles, Dataset};
pub use gamma::{Gamma, GammaParam};
pub use lognormal::{LogNormal, LogNormalParam};
pub use multinomial::Multinomial;
pub use normal_means::{soft_threshold, NormalMeans};
pub use regression::{Logistic, PoissonLogLinear};
pub use spec::ModelSpec;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::optimize::fd_hessian_from_gradient;
use crate::rng::SimRng;

/// Parameter-space tag carried by a [`ParamPoint`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Domain {
    Unconstrained,
    /// Closed unit interval, per coordinate.
    UnitInterval,
    /// Probability simplex: coordinates ≥ 0 summing to one.
    Simplex,
    /// All coordinates strictly positive.
    PositiveOrthant,
    /// Open box, infinite bounds allowed.
    OpenBox {
        lo: Vec<f64>,
        hi: Vec<f64>,
    },
}

impl Domain {
    pub fn contains(&self, theta: &[f64]) -> bool {
        if !theta.iter().all(|v| v.is_finite()) {
            return false;
        }
        match self {
            Domain::Unconstrained => true,
            Domain::UnitInterval => theta.iter().all(|&v| (0.0..=1.0).contains(&v)),
            Domain::Simplex => theta.iter().all(|&v| v >= 0.0) && (theta.iter().sum::<f64>() - 1.0).abs() <= 1e-12,
            Domain::PositiveOrthant => theta.iter().all(|&v| v > 0.0),
            Domain::OpenBox { lo, hi } => theta.iter().zip(lo.iter().zip(hi)).all(|(&v, (&l, &h))| v > l && v < h),
        }
    }
}

/// A parameter value with its domain tag.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamPoint {
    pub values: Vec<f64>,
    pub domain: Domain,
}

impl ParamPoint {
    pub fn new(values: Vec<f64>, domain: Domain) -> Result<Self> {
        if !domain.contains(&values) {
            return Err(Error::InvalidInput(format!("{values:?} outside {domain:?}")));
        }
        Ok(Self { values, domain })
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }
}

/// A parametric model.
///
/// Log-likelihoods are reported up to an additive constant that depends on
/// the data only; relative likelihoods are unaffected. Values outside the
/// domain evaluate to `-inf`.
pub trait Model: Send + Sync {
    fn name(&self) -> &'static str;
    fn dim(&self) -> usize;
    fn domain(&self) -> Domain;

    fn in_domain(&self, theta: &[f64]) -> bool {
        theta.len() == self.dim() && self.domain().contains(theta)
    }

    fn log_likelihood(&self, data: &Dataset, theta: &[f64]) -> f64;

    /// Draw a dataset of size `n` from P_θ.
    fn sample(&self, theta: &[f64], n: usize, rng: &mut SimRng) -> Dataset;

    /// Maximum-likelihood estimate. Boundary maxima are errors.
    fn mle(&self, data: &Dataset) -> Result<Vec<f64>>;

    /// sup_θ log L(θ), which may be attained on the boundary.
    /// `None` when the optimizer fails.
    fn sup_log_likelihood(&self, data: &Dataset) -> Option<f64> {
        self.mle(data).ok().map(|t| self.log_likelihood(data, &t))
    }

    /// Gradient of the log-likelihood.
    fn score(&self, data: &Dataset, theta: &[f64]) -> Vec<f64>;

    /// Observed information −∇² log L(θ), when available in closed form.
    fn analytic_information(&self, _data: &Dataset, _theta: &[f64]) -> Option<DMatrix<f64>> {
        None
    }
}

macro_rules! forward_model {
    ($($ptr:ty),*) => {$(
        impl<M: Model + ?Sized> Model for $ptr {
            fn name(&self) -> &'static str {
                (**self).name()
            }
            fn dim(&self) -> usize {
                (**self).dim()
            }
            fn domain(&self) -> Domain {
                (**self).domain()
            }
            fn in_domain(&self, theta: &[f64]) -> bool {
                (**self).in_domain(theta)
            }
            fn log_likelihood(&self, data: &Dataset, theta: &[f64]) -> f64 {
                (**self).log_likelihood(data, theta)
            }
            fn sample(&self, theta: &[f64], n: usize, rng: &mut SimRng) -> Dataset {
                (**self).sample(theta, n, rng)
            }
            fn mle(&self, data: &Dataset) -> Result<Vec<f64>> {
                (**self).mle(data)
            }
            fn sup_log_likelihood(&self, data: &Dataset) -> Option<f64> {
                (**self).sup_log_likelihood(data)
            }
            fn score(&self, data: &Dataset, theta: &[f64]) -> Vec<f64> {
                (**self).score(data, theta)
            }
            fn analytic_information(&self, data: &Dataset, theta: &[f64]) -> Option<DMatrix<f64>> {
                (**self).analytic_information(data, theta)
            }
        }
    )*};
}

forward_model!(&M, Box<M>, std::sync::Arc<M>);

/// Relative likelihood at a point, with a flag set when log L(θ) is not finite.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RelativeLikelihood {
    pub value: f64,
    pub domain_violation: bool,
}

/// R(x, θ) = L(θ)/L(θ̂), computed on the log scale.
pub fn relative_likelihood(model: &dyn Model, data: &Dataset, theta: &[f64]) -> Result<RelativeLikelihood> {
    let sup = model
        .sup_log_likelihood(data)
        .ok_or_else(|| Error::NonConvergence(format!("{}: likelihood maximization failed", model.name())))?;
    let ll = if theta.len() == model.dim() {
        model.log_likelihood(data, theta)
    } else {
        f64::NEG_INFINITY
    };
    if !ll.is_finite() {
        return Ok(RelativeLikelihood {
            value: 0.0,
            domain_violation: true,
        });
    }
    Ok(RelativeLikelihood {
        value: (ll - sup).min(0.0).exp(),
        domain_violation: false,
    })
}

/// Finite-difference observed information from the model's score, step
/// `1e-5·(1+|θ_i|)`.
pub fn fd_information(model: &dyn Model, data: &Dataset, theta: &[f64]) -> DMatrix<f64> {
    let grad = |t: &[f64]| model.score(data, t);
    -fd_hessian_from_gradient(&grad, theta, 1e-5)
}

/// The data-dependent anchor shared by all Gaussian families: θ̂ and J.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Anchor {
    pub mean: Vec<f64>,
    pub information: DMatrix<f64>,
}

impl Anchor {
    pub fn new(mean: Vec<f64>, information: DMatrix<f64>) -> Result<Self> {
        let d = mean.len();
        if information.nrows() != d || information.ncols() != d {
            return Err(Error::InvalidInput(format!(
                "information is {}x{}, expected {d}x{d}",
                information.nrows(),
                information.ncols()
            )));
        }
        check_positive_definite(&information)?;
        Ok(Self { mean, information })
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }
}

pub(crate) fn check_positive_definite(m: &DMatrix<f64>) -> Result<()> {
    if !m.iter().all(|v| v.is_finite()) {
        return Err(Error::SingularInformation("non-finite entries".into()));
    }
    let asym = (m - m.transpose()).amax();
    if asym > 1e-8 * (1.0 + m.amax()) {
        return Err(Error::SingularInformation(format!("asymmetric by {asym:e}")));
    }
    match m.clone().cholesky() {
        Some(_) => Ok(()),
        None => Err(Error::SingularInformation("matrix is not positive definite".into())),
    }
}

/// θ̂ together with the observed information J_n, analytic where the model
/// provides it and central finite differences of the score otherwise.
pub fn mle_and_information(model: &dyn Model, data: &Dataset) -> Result<(ParamPoint, DMatrix<f64>)> {
    let theta = model.mle(data)?;
    let info = model
        .analytic_information(data, &theta)
        .unwrap_or_else(|| fd_information(model, data, &theta));
    let info = (&info + info.transpose()) * 0.5;
    check_positive_definite(&info)?;
    Ok((
        ParamPoint {
            values: theta,
            domain: model.domain(),
        },
        info,
    ))
}

/// Convenience: the [`Anchor`] of a model/data pair.
pub fn anchor(model: &dyn Model, data: &Dataset) -> Result<Anchor> {
    let (theta, info) = mle_and_information(model, data)?;
    Ok(Anchor {
        mean: theta.values,
        information: info,
    })
}

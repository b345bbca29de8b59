use nalgebra::DMatrix;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::approx::{fit_scalar, fit_vector, FitTrace, SAConfig};
use crate::contour::{AxisSpec, ExactBinomialContour, McContour, PossibilityContour};
use crate::error::{Error, Result};
use crate::family::{
    DirichletContour, DirichletFamily, FamilyRecord, GaussianScalarFamily, GaussianVectorFamily, VariationalFamily,
};
use crate::model::{anchor, Anchor, Dataset, Model, ModelSpec, Multinomial};
use crate::nuisance::{
    censored_plugin_contour, kaplan_meier_swapped, quantile_family, CensoringDistribution, EmpiricalRiskContour,
    RiskSpec,
};
use crate::rng::{derive_seed, stream};

/// The contour evaluated at the truth (or approximated).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ContourMethod {
    /// Exact binomial contour (binomial model only).
    Exact,
    /// Monte Carlo validification of the relative likelihood.
    Naive,
    /// Bootstrap of the empirical check risk (`quantile` must be set).
    Bootstrap,
    /// Censoring plug-in with a swapped Kaplan–Meier Ĝ (`censoring` must be set).
    Censored,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Approximation {
    #[default]
    None,
    /// Scalar-indexed Gaussian, fit by credal mass.
    Scalar,
    /// Gaussian with one ξ per eigen-direction, fit at boundary points.
    Vector,
    /// Scalar-indexed Dirichlet (multinomial model only).
    Dirichlet,
}

/// Monte Carlo size of the contour of a fitted Dirichlet.
pub const DIRICHLET_CONTOUR_DRAWS: usize = 2000;

/// Fixed covariates: standard normal draws, then each column centered and
/// scaled to mean square one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CovariateDesign {
    pub columns: usize,
    pub seed: u64,
}

impl CovariateDesign {
    pub fn matrix(&self, n: usize) -> DMatrix<f64> {
        standardized_covariates(n, self.columns, self.seed)
    }
}

pub fn standardized_covariates(n: usize, p: usize, seed: u64) -> DMatrix<f64> {
    let mut rng = stream(seed, &[]);
    let mut z: DMatrix<f64> = DMatrix::from_fn(n, p, |_, _| StandardNormal.sample(&mut rng));
    for mut col in z.column_iter_mut() {
        let mean = col.mean();
        col.add_scalar_mut(-mean);
        let ms = col.norm_squared() / n as f64;
        if ms > 0.0 {
            col /= ms.sqrt();
        }
    }
    z
}

fn default_alphas() -> Vec<f64> {
    (1..100).map(|i| i as f64 / 100.0).collect()
}

/// A replicated simulation design.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub model: ModelSpec,
    /// Θ at which the contour is evaluated.
    pub truth: Vec<f64>,
    /// Parameter the data are simulated from, when it differs from `truth`
    /// (the bootstrap scenario simulates from a model but targets a quantile).
    #[serde(default)]
    pub generator: Option<Vec<f64>>,
    pub n: usize,
    pub replications: usize,
    pub contour: ContourMethod,
    #[serde(default)]
    pub approximation: Approximation,
    /// Also supplies the Monte Carlo size `m_inner` of naive, bootstrap and
    /// censored contours.
    #[serde(default)]
    pub sa: SAConfig,
    #[serde(default)]
    pub grid: Vec<AxisSpec>,
    #[serde(default)]
    pub covariates: Option<CovariateDesign>,
    /// τ for the bootstrap method.
    #[serde(default)]
    pub quantile: Option<f64>,
    /// True censoring distribution for the censored method.
    #[serde(default)]
    pub censoring: Option<CensoringDistribution>,
    #[serde(default = "default_alphas")]
    pub alphas: Vec<f64>,
    pub seed: u64,
}

/// Output of one replication.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Replication {
    pub value: f64,
    pub seconds: f64,
    pub xi_hat: Option<Vec<f64>>,
    pub iterations: Option<usize>,
}

impl Scenario {
    pub fn covariate_matrix(&self) -> Option<DMatrix<f64>> {
        self.covariates.map(|c| c.matrix(self.n))
    }

    pub fn build_model(&self) -> Result<Box<dyn Model>> {
        self.model.build(self.covariate_matrix().as_ref())
    }

    pub fn generator(&self) -> &[f64] {
        self.generator.as_deref().unwrap_or(&self.truth)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.replications == 0 || self.n == 0 {
            return bad("replications and n must be positive".into());
        }
        self.sa.validate()?;
        if self.alphas.iter().any(|a| !(*a > 0.0 && *a < 1.0)) || !self.alphas.windows(2).all(|w| w[0] < w[1]) {
            return bad("alphas must be increasing and inside (0, 1)".into());
        }
        let model = self.build_model()?;
        if !model.in_domain(self.generator()) {
            return bad(format!(
                "{:?} is outside the {} parameter space",
                self.generator(),
                model.name()
            ));
        }
        match self.contour {
            ContourMethod::Exact if self.model != ModelSpec::Binomial => {
                bad("the exact contour needs the binomial model".into())
            }
            ContourMethod::Bootstrap => match self.quantile {
                Some(t) if t > 0.0 && t < 1.0 && self.truth.len() == 1 => Ok(()),
                _ => bad("the bootstrap method needs a quantile level in (0, 1) and a scalar truth".into()),
            },
            ContourMethod::Censored => {
                if !matches!(self.model, ModelSpec::LogNormal { .. }) {
                    return bad("the censored method supports the log-normal model".into());
                }
                match &self.censoring {
                    Some(g) => g.validate(),
                    None => bad("the censored method needs a censoring distribution".into()),
                }
            }
            _ if !model.in_domain(&self.truth) => bad(format!("truth {:?} is outside the parameter space", self.truth)),
            _ => Ok(()),
        }
    }

    /// Data for replication `r`.
    pub fn simulate(&self, model: &dyn Model, r: usize) -> Dataset {
        let mut rng = stream(self.seed, &[r as u64, 0]);
        let y = model.sample(self.generator(), self.n, &mut rng);
        match (&self.contour, &self.censoring) {
            (ContourMethod::Censored, Some(g)) => {
                let (z, t): (Vec<f64>, Vec<bool>) = y
                    .responses
                    .iter()
                    .map(|&y| {
                        let c = g.sample(&mut rng);
                        (y.max(c), y >= c)
                    })
                    .unzip();
                Dataset::new(z).with_observed(t).expect("lengths match")
            }
            _ => y,
        }
    }

    /// The base contour for a dataset.
    pub fn base_contour<'a>(
        &self,
        model: &'a dyn Model,
        data: &Dataset,
        r: usize,
    ) -> Result<Box<dyn PossibilityContour + 'a>> {
        let m = self.sa.m_inner;
        Ok(match self.contour {
            ContourMethod::Exact => {
                let s = data.responses.iter().sum::<f64>().round() as u64;
                Box::new(ExactBinomialContour::new(data.n() as u64, s))
            }
            ContourMethod::Naive => Box::new(McContour::new(model, data.clone(), m)?),
            ContourMethod::Bootstrap => {
                let spec = RiskSpec::quantile(self.quantile.unwrap_or(0.5))?.with_bootstrap(m);
                Box::new(EmpiricalRiskContour::new(
                    data.responses.clone(),
                    spec,
                    derive_seed(self.seed, &[r as u64, 3]),
                )?)
            }
            ContourMethod::Censored => {
                let obs = data.observed.clone().unwrap_or_else(|| vec![true; data.n()]);
                let ghat = kaplan_meier_swapped(&data.responses, &obs)?;
                Box::new(censored_plugin_contour(model, data.clone(), ghat, m)?)
            }
        })
    }

    /// Proposal for sup-searches over `contour`: `None` when the contour
    /// has a closed Gaussian form, else the anchored Gaussian at ξ = 1.
    pub fn search_proposal(
        &self,
        model: &dyn Model,
        data: &Dataset,
        contour: &dyn PossibilityContour,
    ) -> Result<Option<GaussianScalarFamily>> {
        if contour.gaussian_form().is_some() {
            return Ok(None);
        }
        Ok(Some(GaussianScalarFamily::new(self.anchor(model, data)?, 1.0)?))
    }

    fn anchor(&self, model: &dyn Model, data: &Dataset) -> Result<Anchor> {
        match self.contour {
            ContourMethod::Bootstrap => Ok(quantile_family(&data.responses, self.quantile.unwrap_or(0.5), 1.0)?.anchor),
            _ => anchor(model, data),
        }
    }

    /// Base contour for replication `r` and, unless the approximation is
    /// `None`, the Gaussian family fitted to it.
    pub fn prepare<'a>(&self, model: &'a dyn Model, data: &Dataset, r: usize) -> Result<Prepared<'a>> {
        let base = self.base_contour(model, data, r)?;
        let config = SAConfig {
            seed: derive_seed(self.seed, &[r as u64, 2]),
            ..self.sa.clone()
        };
        let fitted = match self.approximation {
            Approximation::None => None,
            Approximation::Scalar => {
                let family = GaussianScalarFamily::new(self.anchor(model, data)?, config.xi0)?;
                let (fit, trace) = fit_scalar(&family, base.as_ref(), &config)?;
                Some(Fitted::Scalar(fit, trace))
            }
            Approximation::Vector => {
                let a = self.anchor(model, data)?;
                let d = a.mean.len();
                let family = GaussianVectorFamily::new(a, vec![config.xi0; d])?;
                let (fit, trace) = fit_vector(&family, base.as_ref(), &config)?;
                Some(Fitted::Vector(fit, trace))
            }
            Approximation::Dirichlet => {
                let ModelSpec::Multinomial { categories } = self.model else {
                    return Err(Error::Config("the Dirichlet family needs the multinomial model".into()));
                };
                let counts = Multinomial::new(categories).counts(data);
                let family = DirichletFamily::from_counts(&counts, config.xi0)?;
                let (fit, trace) = fit_scalar(&family, base.as_ref(), &config)?;
                Some(Fitted::Dirichlet(
                    DirichletContour::new(fit, DIRICHLET_CONTOUR_DRAWS),
                    trace,
                ))
            }
        };
        Ok(Prepared { base, fitted })
    }

    /// Simulate, build, fit and evaluate at the truth.
    pub fn replicate(&self, model: &dyn Model, r: usize) -> Result<Replication> {
        let data = self.simulate(model, r);
        let start = std::time::Instant::now();
        let prepared = self.prepare(model, &data, r)?;
        let e = prepared
            .contour()
            .evaluate(&self.truth, derive_seed(self.seed, &[r as u64, 1]));
        let seconds = start.elapsed().as_secs_f64();
        if !e.is_ok() {
            return Err(Error::NonConvergence(format!(
                "replication {r}: contour evaluation at the truth failed"
            )));
        }
        let trace = prepared.fitted.as_ref().map(Fitted::trace);
        Ok(Replication {
            value: e.value,
            seconds,
            xi_hat: trace.map(|t| t.xi_hat.clone()),
            iterations: trace.map(FitTrace::iterations),
        })
    }
}

/// A fitted Gaussian approximation with its Robbins–Monro trace.
#[derive(Debug, Clone)]
pub enum Fitted {
    Scalar(GaussianScalarFamily, FitTrace),
    Vector(GaussianVectorFamily, FitTrace),
    Dirichlet(DirichletContour, FitTrace),
}

impl Fitted {
    pub fn trace(&self) -> &FitTrace {
        match self {
            Fitted::Scalar(_, t) | Fitted::Vector(_, t) | Fitted::Dirichlet(_, t) => t,
        }
    }

    pub fn contour(&self) -> &dyn PossibilityContour {
        match self {
            Fitted::Scalar(f, _) => f,
            Fitted::Vector(f, _) => f,
            Fitted::Dirichlet(c, _) => c,
        }
    }

    pub fn family(&self) -> &dyn VariationalFamily {
        match self {
            Fitted::Scalar(f, _) => f,
            Fitted::Vector(f, _) => f,
            Fitted::Dirichlet(c, _) => &c.family,
        }
    }

    pub fn record(&self, alpha: f64, seed: u64) -> FamilyRecord {
        let it = self.trace().iterations();
        match self {
            Fitted::Scalar(f, _) => f.record(alpha, seed, it),
            Fitted::Vector(f, _) => f.record(alpha, seed, it),
            Fitted::Dirichlet(c, _) => c.family.record(alpha, seed, it),
        }
    }
}

pub struct Prepared<'a> {
    pub base: Box<dyn PossibilityContour + 'a>,
    pub fitted: Option<Fitted>,
}

impl Prepared<'_> {
    /// The fitted family when there is one, else the base contour.
    pub fn contour(&self) -> &dyn PossibilityContour {
        self.fitted.as_ref().map_or(self.base.as_ref(), Fitted::contour)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn covariates_are_standardized() {
        let z = standardized_covariates(25, 2, 4);
        for col in z.column_iter() {
            assert!(col.sum().abs() < 1e-12);
            assert!((col.norm_squared() / 25.0 - 1.0).abs() < 1e-12);
        }
        assert_eq!(z, standardized_covariates(25, 2, 4));
    }

    #[test]
    fn scenario_json_and_validation() {
        let s: Scenario = serde_json::from_str(
            r#"{"model":{"name":"binomial"},"truth":[0.4],"n":15,"replications":10,"contour":"exact","seed":1}"#,
        )
        .unwrap();
        assert!(s.validate().is_ok());
        assert_eq!(s.alphas.len(), 99);
        let mut bad = s.clone();
        bad.truth = vec![1.4];
        assert!(matches!(bad.validate(), Err(Error::Config(_))));
        let mut bad = s.clone();
        bad.contour = ContourMethod::Bootstrap;
        assert!(bad.validate().is_err());
        let mut bad = s;
        bad.model = ModelSpec::BivariateNormal;
        assert!(bad.validate().is_err());
    }
}

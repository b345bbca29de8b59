use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::{
    Bernoulli, BivariateCorrelation, Gamma, GammaParam, LogNormal, LogNormalParam, Logistic, Model, Multinomial,
    NormalMeans, PoissonLogLinear,
};
use crate::error::{Error, Result};

/// Serializable model choice, as used in run configs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ModelSpec {
    Binomial,
    BivariateNormal,
    Gamma {
        #[serde(default = "default_gamma_param")]
        param: GammaParam,
    },
    LogNormal {
        #[serde(default = "default_lognormal_param")]
        param: LogNormalParam,
    },
    Multinomial {
        categories: usize,
    },
    NormalMeans {
        dim: usize,
        #[serde(default = "one")]
        sigma: f64,
        /// Defaults to the universal (σ² log n)^{1/2}.
        #[serde(default)]
        lambda: Option<f64>,
    },
    /// Design = intercept plus the dataset's covariate columns.
    Logistic,
    Poisson,
}

fn default_gamma_param() -> GammaParam {
    GammaParam::ShapeScale
}

fn default_lognormal_param() -> LogNormalParam {
    LogNormalParam::MeanVariance
}

fn one() -> f64 {
    1.0
}

impl ModelSpec {
    /// Instantiate the model; regression models need the covariate matrix.
    pub fn build(&self, covariates: Option<&DMatrix<f64>>) -> Result<Box<dyn Model>> {
        let need = || covariates.ok_or_else(|| Error::Config("regression models need covariates".into()));
        Ok(match self {
            ModelSpec::Binomial => Box::new(Bernoulli),
            ModelSpec::BivariateNormal => Box::new(BivariateCorrelation),
            ModelSpec::Gamma { param } => Box::new(Gamma::new(*param)),
            ModelSpec::LogNormal { param } => Box::new(LogNormal::new(*param)),
            ModelSpec::Multinomial { categories } => {
                if *categories < 2 {
                    return Err(Error::Config("multinomial needs at least 2 categories".into()));
                }
                Box::new(Multinomial::new(*categories))
            }
            ModelSpec::NormalMeans { dim, sigma, lambda } => {
                if !(*sigma > 0.0) || lambda.is_some_and(|l| !(l >= 0.0)) || *dim == 0 {
                    return Err(Error::Config("normal-means needs dim ≥ 1, σ > 0 and λ ≥ 0".into()));
                }
                let lambda = lambda.unwrap_or_else(|| NormalMeans::universal_lambda(*dim, *sigma));
                Box::new(NormalMeans::new(*dim, *sigma, lambda))
            }
            ModelSpec::Logistic => Box::new(Logistic::with_intercept(need()?)),
            ModelSpec::Poisson => Box::new(PoissonLogLinear::with_intercept(need()?)),
        })
    }

    pub fn needs_covariates(&self) -> bool {
        matches!(self, ModelSpec::Logistic | ModelSpec::Poisson)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_build() {
        let s: ModelSpec = serde_json::from_str(r#"{"name":"gamma","param":"log-shape-log-scale"}"#).unwrap();
        assert_eq!(
            s,
            ModelSpec::Gamma {
                param: GammaParam::LogShapeLogScale
            }
        );
        assert_eq!(s.build(None).unwrap().dim(), 2);
        let s: ModelSpec = serde_json::from_str(r#"{"name":"normal-means","dim":50}"#).unwrap();
        assert_eq!(s.build(None).unwrap().dim(), 50);
        let s: ModelSpec = serde_json::from_str(r#"{"name":"poisson"}"#).unwrap();
        assert!(matches!(s.build(None), Err(Error::Config(_))));
        let x = DMatrix::from_element(4, 2, 1.0);
        assert_eq!(s.build(Some(&x)).unwrap().dim(), 3);
        assert!(serde_json::from_str::<ModelSpec>(r#"{"name":"cauchy"}"#).is_err());
    }
}

use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::approx::SAConfig;
use crate::calibration::{Approximation, ContourMethod, CovariateDesign, Scenario};
use crate::contour::AxisSpec;
use crate::error::{Error, Result};
use crate::inference::{Hypothesis, HypothesisSpec, SearchBudget};
use crate::model::{Bernoulli, ColumnRoles, Dataset, Model, ModelSpec};
use crate::nuisance::CensoringDistribution;
use crate::rng::stream;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Contour,
    Fit,
    Calibrate,
    Hypothesis,
    Marginal,
    Choquet,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Contour => "contour",
            Command::Fit => "fit",
            Command::Calibrate => "calibrate",
            Command::Hypothesis => "hypothesis",
            Command::Marginal => "marginal",
            Command::Choquet => "choquet",
        }
    }
}

/// Where the observed data come from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "kebab-case", deny_unknown_fields)]
pub enum DataSource {
    Inline {
        responses: Vec<f64>,
        /// Rows of the covariate matrix.
        #[serde(default)]
        covariates: Option<Vec<Vec<f64>>>,
        #[serde(default)]
        observed: Option<Vec<bool>>,
    },
    Csv {
        path: PathBuf,
        #[serde(flatten)]
        roles: ColumnRoles,
    },
    /// `successes` ones among `trials` Bernoulli responses.
    Binomial { trials: usize, successes: usize },
    /// Draw from the model at `theta`, seeded by the run seed.
    Simulate {
        theta: Vec<f64>,
        n: usize,
        #[serde(default)]
        covariates: Option<CovariateDesign>,
        #[serde(default)]
        censoring: Option<CensoringDistribution>,
    },
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Losses available to the `choquet` command.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case", deny_unknown_fields)]
pub enum LossSpec {
    Constant {
        value: f64,
    },
    /// a·θ − b
    Linear {
        a: Vec<f64>,
        #[serde(default)]
        b: f64,
    },
    /// |a·θ − b|
    Absolute {
        a: Vec<f64>,
        #[serde(default)]
        b: f64,
    },
    /// (a·θ − b)²
    Squared {
        a: Vec<f64>,
        #[serde(default)]
        b: f64,
    },
    /// 1 on the hypothesis, 0 elsewhere.
    Indicator {
        hypothesis: HypothesisSpec,
    },
}

impl LossSpec {
    pub fn dim(&self) -> Option<usize> {
        match self {
            LossSpec::Constant { .. } | LossSpec::Indicator { .. } => None,
            LossSpec::Linear { a, .. } | LossSpec::Absolute { a, .. } | LossSpec::Squared { a, .. } => Some(a.len()),
        }
    }

    pub fn into_fn(self) -> impl Fn(&[f64]) -> f64 + Send + Sync + 'static {
        move |t: &[f64]| match &self {
            LossSpec::Constant { value } => *value,
            LossSpec::Linear { a, b } => dot(a, t) - b,
            LossSpec::Absolute { a, b } => (dot(a, t) - b).abs(),
            LossSpec::Squared { a, b } => (dot(a, t) - b).powi(2),
            LossSpec::Indicator { hypothesis } => {
                if Hypothesis::from(hypothesis).contains(t) {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Study {
    Validity,
    Hypotheses,
    Timing,
}

/// Simulation design for the `calibrate` command; model, method,
/// approximation, SA settings, grid, quantile and seed come from the
/// enclosing config.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CalibrationSpec {
    pub study: Study,
    pub truth: Vec<f64>,
    #[serde(default)]
    pub generator: Option<Vec<f64>>,
    pub n: usize,
    pub replications: usize,
    #[serde(default)]
    pub covariates: Option<CovariateDesign>,
    #[serde(default)]
    pub censoring: Option<CensoringDistribution>,
    #[serde(default)]
    pub alphas: Option<Vec<f64>>,
}

fn naive() -> ContourMethod {
    ContourMethod::Naive
}

/// One run, as read from the JSON config.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Optional; must agree with the command line when present.
    #[serde(default)]
    pub command: Option<Command>,
    pub model: ModelSpec,
    #[serde(default)]
    pub data: Option<DataSource>,
    #[serde(default = "naive")]
    pub method: ContourMethod,
    #[serde(default)]
    pub approximation: Approximation,
    #[serde(default)]
    pub sa: SAConfig,
    #[serde(default)]
    pub grid: Vec<AxisSpec>,
    #[serde(default)]
    pub hypotheses: Vec<HypothesisSpec>,
    #[serde(default)]
    pub budget: SearchBudget,
    /// τ for the bootstrap method.
    #[serde(default)]
    pub quantile: Option<f64>,
    /// Rows of a linear feature map G for `marginal`.
    #[serde(default)]
    pub feature: Option<Vec<Vec<f64>>>,
    #[serde(default)]
    pub loss: Option<LossSpec>,
    #[serde(default)]
    pub levels: Option<usize>,
    #[serde(default)]
    pub calibration: Option<CalibrationSpec>,
    /// Directory receiving the output files.
    pub output: PathBuf,
    pub seed: u64,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read config {}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    /// Checks that do not need the data.
    pub fn validate(&self, command: Command) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.to_string()));
        if let Some(c) = self.command {
            if c != command {
                return Err(Error::Config(format!(
                    "config is for '{}', not '{}'",
                    c.name(),
                    command.name()
                )));
            }
        }
        self.sa.validate()?;
        if command == Command::Calibrate {
            if self.calibration.is_none() {
                return bad("calibrate needs a 'calibration' block");
            }
        } else {
            super::check_method(&self.model, self.method, self.quantile)?;
            match &self.data {
                None => return bad("a 'data' block is required"),
                Some(DataSource::Csv { path, .. }) if !path.is_file() => {
                    return Err(Error::Config(format!("data file {} does not exist", path.display())));
                }
                _ => {}
            }
        }
        match command {
            Command::Contour | Command::Marginal if self.grid.is_empty() => bad("a 'grid' is required"),
            Command::Fit if self.approximation == Approximation::None => {
                bad("fit needs an approximation: scalar, vector or dirichlet")
            }
            Command::Hypothesis if self.hypotheses.is_empty() => bad("no hypotheses given"),
            Command::Marginal if self.feature.is_none() => bad("marginal needs a 'feature' matrix"),
            Command::Choquet if self.loss.is_none() => bad("choquet needs a 'loss'"),
            Command::Choquet if self.levels.is_some_and(|l| l < 2) => bad("choquet needs at least 2 levels"),
            _ => Ok(()),
        }
    }

    /// Observed data, plus the model built against its covariates.
    pub fn load_data(&self) -> Result<(Box<dyn Model>, Dataset)> {
        let source = self
            .data
            .as_ref()
            .ok_or_else(|| Error::Config("a 'data' block is required".into()))?;
        let data = match source {
            DataSource::Inline {
                responses,
                covariates,
                observed,
            } => {
                let mut d = Dataset::new(responses.clone());
                if let Some(rows) = covariates {
                    let p = rows.first().map_or(0, Vec::len);
                    if rows.iter().any(|r| r.len() != p) {
                        return Err(Error::Config("covariate rows differ in length".into()));
                    }
                    let flat: Vec<f64> = rows.iter().flatten().copied().collect();
                    d = d.with_covariates(DMatrix::from_row_slice(rows.len(), p, &flat))?;
                }
                if let Some(o) = observed {
                    d = d.with_observed(o.clone())?;
                }
                d.validate()?;
                d
            }
            DataSource::Csv { path, roles } => Dataset::from_csv(path, roles)?,
            DataSource::Binomial { trials, successes } => {
                if successes > trials {
                    return Err(Error::Config("more successes than trials".into()));
                }
                Bernoulli::dataset(*trials, *successes)
            }
            DataSource::Simulate {
                theta,
                n,
                covariates,
                censoring,
            } => {
                let x = covariates.map(|c| c.matrix(*n));
                let model = self.model.build(x.as_ref())?;
                if !model.in_domain(theta) {
                    return Err(Error::Config(format!(
                        "simulation parameter {theta:?} outside the parameter space"
                    )));
                }
                let mut rng = stream(self.seed, &[0xDA7A]);
                let mut d = model.sample(theta, *n, &mut rng);
                if let Some(g) = censoring {
                    g.validate()?;
                    let (z, t): (Vec<f64>, Vec<bool>) = d
                        .responses
                        .iter()
                        .map(|&y| {
                            let c = g.sample(&mut rng);
                            (y.max(c), y >= c)
                        })
                        .unzip();
                    d = Dataset::new(z).with_observed(t)?;
                }
                if let Some(x) = x {
                    d = d.with_covariates(x)?;
                }
                d
            }
        };
        let model = self.model.build(data.covariates.as_ref())?;
        Ok((model, data))
    }

    /// The run viewed as a one-replication scenario (or the calibration
    /// design, for `calibrate`).
    pub fn scenario(&self, data_n: usize) -> Scenario {
        let cal = self.calibration.as_ref();
        Scenario {
            model: self.model.clone(),
            truth: cal.map_or_else(Vec::new, |c| c.truth.clone()),
            generator: cal.and_then(|c| c.generator.clone()),
            n: cal.map_or(data_n, |c| c.n),
            replications: cal.map_or(1, |c| c.replications),
            contour: self.method,
            approximation: self.approximation,
            sa: self.sa.clone(),
            grid: self.grid.clone(),
            covariates: cal.and_then(|c| c.covariates),
            quantile: self.quantile,
            censoring: cal.and_then(|c| c.censoring.clone()),
            alphas: cal
                .and_then(|c| c.alphas.clone())
                .unwrap_or_else(|| (1..100).map(|i| i as f64 / 100.0).collect()),
            seed: self.seed,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<RunConfig> {
        serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    #[test]
    fn defaults_and_validation() {
        let c = parse(
            r#"{"model":{"name":"binomial"},"data":{"source":"binomial","trials":15,"successes":6},
                "output":"out","seed":3}"#,
        )
        .unwrap();
        assert_eq!(c.method, ContourMethod::Naive);
        assert_eq!(c.approximation, Approximation::None);
        assert_eq!(c.sa, SAConfig::default());
        assert!(c.validate(Command::Fit).is_err());
        assert!(c.validate(Command::Contour).is_err());
        assert!(c.validate(Command::Choquet).is_err());
        assert!(c.validate(Command::Calibrate).is_err());
        let fit = RunConfig {
            approximation: Approximation::Scalar,
            ..c.clone()
        };
        fit.validate(Command::Fit).unwrap();
        let pinned = RunConfig {
            command: Some(Command::Contour),
            ..fit
        };
        assert!(pinned.validate(Command::Fit).is_err());
    }

    #[test]
    fn unknown_fields_are_rejected() {
        assert!(parse(r#"{"model":{"name":"binomial"},"output":"o","seed":1,"sedd":2}"#).is_err());
        assert!(parse(
            r#"{"model":{"name":"binomial"},"output":"o","seed":1,
                "data":{"source":"binomial","trials":3,"successes":1,"n":2}}"#
        )
        .is_err());
    }

    #[test]
    fn inline_and_binomial_data() {
        let c = parse(
            r#"{"model":{"name":"poisson"},"output":"o","seed":1,
                "data":{"source":"inline","responses":[1,0,3],"covariates":[[0.1],[-0.2],[0.4]]}}"#,
        )
        .unwrap();
        let (model, data) = c.load_data().unwrap();
        assert_eq!(model.dim(), 2);
        assert_eq!(data.covariates.unwrap().column(0).as_slice(), &[0.1, -0.2, 0.4]);

        let c = parse(
            r#"{"model":{"name":"binomial"},"output":"o","seed":1,
                "data":{"source":"binomial","trials":4,"successes":5}}"#,
        )
        .unwrap();
        assert!(matches!(c.load_data(), Err(Error::Config(_))));
    }

    #[test]
    fn simulated_data_follow_the_seed() {
        let text = r#"{"model":{"name":"gamma"},"output":"o","seed":9,
                       "data":{"source":"simulate","theta":[2.0,1.5],"n":30}}"#;
        let a = parse(text).unwrap().load_data().unwrap().1;
        let b = parse(text).unwrap().load_data().unwrap().1;
        assert_eq!(a.responses, b.responses);
        let c = RunConfig {
            seed: 10,
            ..parse(text).unwrap()
        }
        .load_data()
        .unwrap()
        .1;
        assert_ne!(a.responses, c.responses);
        let bad = text.replace("[2.0,1.5]", "[-2.0,1.5]");
        assert!(parse(&bad).unwrap().load_data().is_err());
    }

    #[test]
    fn losses_evaluate() {
        let l: LossSpec = serde_json::from_str(r#"{"type":"squared","a":[1,2],"b":1}"#).unwrap();
        assert_eq!(l.dim(), Some(2));
        assert_eq!(l.into_fn()(&[1.0, 1.0]), 4.0);
        let l: LossSpec =
            serde_json::from_str(r#"{"type":"indicator","hypothesis":{"type":"half-space","a":[1],"b":0}}"#).unwrap();
        let f = l.into_fn();
        assert_eq!((f(&[1.0]), f(&[-1.0])), (1.0, 0.0));
    }
}

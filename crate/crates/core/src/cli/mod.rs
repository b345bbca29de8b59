//! The `imvar` command-line driver.
//!
//! ```text
//! imvar <contour|fit|calibrate|hypothesis|marginal|choquet> --config run.json [--seed N] [--threads N] [--verbose]
//! ```
//!
//! Every run reads one JSON [`RunConfig`], computes everything in memory and
//! then writes its files into `output` atomically. CSV files open with `#`
//! header lines and JSON files wrap their payload as
//! `{"header": {...}, "result": ...}`; both carry the SHA-256 of the
//! effective configuration and the seed. Exit codes: 0 success, 2 bad
//! configuration or input, 3 numerical failure.

mod config;

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::Parser;
use log::info;
use nalgebra::DMatrix;
use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

pub use config::{CalibrationSpec, Command, DataSource, LossSpec, RunConfig, Study};

use crate::calibration::{hypothesis_calibration, timing_accuracy_study, validity_study, ContourMethod, Prepared};
use crate::contour::grid_eval;
use crate::error::{Error, Result};
use crate::family::{GaussianScalarFamily, VariationalFamily};
use crate::inference::{
    choquet_upper_expectation, lower_probability, marginal_contour, upper_probability, ChoquetSpec, FeatureMap,
    Hypothesis, SearchBudget,
};
use crate::model::ModelSpec;
use crate::rng::derive_seed;

#[derive(Debug, Parser)]
#[command(
    name = "imvar",
    version,
    about = "Possibilistic inferential models and their variational approximations"
)]
pub struct Args {
    #[arg(value_enum)]
    pub command: Command,
    /// JSON run configuration.
    #[arg(long)]
    pub config: PathBuf,
    /// Overrides the seed in the config.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads; results do not depend on this.
    #[arg(long)]
    pub threads: Option<usize>,
    #[arg(long, short)]
    pub verbose: bool,
}

/// Provenance written at the top of every output file.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Header {
    pub program: String,
    pub command: String,
    pub config_sha256: String,
    pub seed: u64,
}

impl Header {
    pub fn new(command: Command, config: &RunConfig) -> Result<Self> {
        let digest = Sha256::digest(serde_json::to_vec(config)?);
        Ok(Self {
            program: format!("imvar {}", env!("CARGO_PKG_VERSION")),
            command: command.name().to_string(),
            config_sha256: digest.iter().map(|b| format!("{b:02x}")).collect(),
            seed: config.seed,
        })
    }

    fn csv_lines(&self) -> String {
        format!(
            "# program: {}\n# command: {}\n# config-sha256: {}\n# seed: {}\n",
            self.program, self.command, self.config_sha256, self.seed
        )
    }
}

/// A file produced by a run, before it is written.
#[derive(Debug, Clone, PartialEq)]
pub enum Output {
    Csv(String, Vec<u8>),
    Json(String, Value),
}

impl Output {
    fn csv(name: &str, write: impl FnOnce(&mut Vec<u8>) -> Result<()>) -> Result<Self> {
        let mut buf = Vec::new();
        write(&mut buf)?;
        Ok(Output::Csv(name.to_string(), buf))
    }

    fn json(name: &str, value: &impl Serialize) -> Result<Self> {
        Ok(Output::Json(name.to_string(), serde_json::to_value(value)?))
    }

    pub fn name(&self) -> &str {
        match self {
            Output::Csv(n, _) | Output::Json(n, _) => n,
        }
    }

    fn bytes(&self, header: &Header) -> Result<Vec<u8>> {
        Ok(match self {
            Output::Csv(_, body) => {
                let mut out = header.csv_lines().into_bytes();
                out.extend_from_slice(body);
                out
            }
            Output::Json(_, result) => {
                let mut out = serde_json::to_vec_pretty(&json!({ "header": header, "result": result }))?;
                out.push(b'\n');
                out
            }
        })
    }
}

pub fn main() -> ExitCode {
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(2)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    env_logger::Builder::new()
        .filter_level(if args.verbose {
            log::LevelFilter::Info
        } else {
            log::LevelFilter::Warn
        })
        .init();
    match run(&args) {
        Ok(paths) => {
            for p in paths {
                println!("wrote {}", p.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

/// Load, validate, compute and write. Returns the paths written.
pub fn run(args: &Args) -> Result<Vec<PathBuf>> {
    let mut config = RunConfig::load(&args.config)?;
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    config.validate(args.command)?;
    let header = Header::new(args.command, &config)?;
    info!(
        "{} with config {} seed {}",
        header.command, header.config_sha256, header.seed
    );
    let outputs = match args.threads {
        Some(t) => rayon::ThreadPoolBuilder::new()
            .num_threads(t.max(1))
            .build()
            .map_err(|e| Error::Config(e.to_string()))?
            .install(|| execute(args.command, &config))?,
        None => execute(args.command, &config)?,
    };
    write_outputs(&config.output, &header, &outputs)
}

/// Compute a command's outputs without touching the filesystem.
pub fn execute(command: Command, config: &RunConfig) -> Result<Vec<Output>> {
    if command == Command::Calibrate {
        return calibrate(config);
    }
    let (model, data) = config.load_data()?;
    info!("{} observations for the {} model", data.n(), model.name());
    let scenario = config.scenario(data.n());
    let prepared = scenario.prepare(model.as_ref(), &data, 0)?;
    let mut outputs = Vec::new();
    if let Some(f) = &prepared.fitted {
        let trace = f.trace();
        info!(
            "fitted ξ = {:?} after {} iterations ({:?})",
            trace.xi_hat,
            trace.iterations(),
            trace.termination
        );
        if command == Command::Fit {
            println!("xi = {:?}", trace.xi_hat);
            println!(
                "termination = {:?} after {} iterations",
                trace.termination,
                trace.iterations()
            );
        }
        outputs.push(Output::json("family.json", &f.record(config.sa.alpha, config.seed))?);
        outputs.push(Output::csv("trace.csv", |w| trace.write_csv(w))?);
    }
    let fallback = scenario.search_proposal(model.as_ref(), &data, prepared.contour())?;
    let proposal = proposal(&prepared, fallback.as_ref());
    let budget = |k: u64| SearchBudget {
        seed: derive_seed(config.seed, &[k, config.budget.seed]),
        ..config.budget
    };
    match command {
        Command::Contour => {
            let grid = grid_eval(prepared.base.as_ref(), &config.grid, config.seed, None)?;
            outputs.push(Output::csv("contour.csv", |w| grid.write_csv(w))?);
            if let Some(f) = &prepared.fitted {
                let approx = grid_eval(f.contour(), &config.grid, config.seed, None)?;
                outputs.push(Output::csv("approx.csv", |w| approx.write_csv(w))?);
            }
        }
        Command::Fit | Command::Calibrate => {}
        Command::Hypothesis => {
            let mut rows = Vec::new();
            for (k, spec) in config.hypotheses.iter().enumerate() {
                let h = Hypothesis::from(spec);
                let b = budget(k as u64);
                let upper = upper_probability(prepared.contour(), &h, &b, proposal)?;
                let lower = match lower_probability(prepared.contour(), &h, &b, proposal) {
                    Ok(r) => Some(r),
                    Err(Error::NoComplement) => None,
                    Err(e) => return Err(e),
                };
                rows.push(json!({ "hypothesis": spec, "upper": upper, "lower": lower }));
            }
            outputs.push(Output::json("hypotheses.json", &rows)?);
        }
        Command::Marginal => {
            let rows = config.feature.as_ref().expect("validated");
            let p = prepared.contour().dim();
            if rows.is_empty() || rows.iter().any(|r| r.len() != p) {
                return Err(Error::Config(format!("feature rows must have {p} entries")));
            }
            let flat: Vec<f64> = rows.iter().flatten().copied().collect();
            let g = FeatureMap::Linear(DMatrix::from_row_slice(rows.len(), p, &flat));
            let grid = marginal_contour(prepared.contour(), &g, &config.grid, &budget(0), proposal)?;
            outputs.push(Output::csv("marginal.csv", |w| grid.write_csv(w))?);
        }
        Command::Choquet => {
            let loss = config.loss.clone().expect("validated");
            let d = prepared.contour().dim();
            if loss.dim().is_some_and(|k| k != d) {
                return Err(Error::Config(format!("loss coefficients must have {d} entries")));
            }
            if let LossSpec::Indicator { hypothesis } = &loss {
                Hypothesis::from(hypothesis).validate(d)?;
            }
            let spec = ChoquetSpec::new(loss.into_fn())
                .with_levels(config.levels.unwrap_or(200))
                .with_budget(budget(0));
            let r = choquet_upper_expectation(prepared.contour(), &spec, proposal)?;
            let levels: Vec<_> = r
                .levels
                .iter()
                .map(|&(s, l)| json!({ "level": s, "sup_loss": l }))
                .collect();
            outputs.push(Output::json(
                "choquet.json",
                &json!({ "value": r.value, "levels": levels, "budget": r.budget }),
            )?);
        }
    }
    Ok(outputs)
}

fn proposal<'a>(
    prepared: &'a Prepared<'_>,
    fallback: Option<&'a GaussianScalarFamily>,
) -> Option<&'a dyn VariationalFamily> {
    match &prepared.fitted {
        Some(f) => Some(f.family()),
        None => fallback.map(|f| f as &dyn VariationalFamily),
    }
}

fn calibrate(config: &RunConfig) -> Result<Vec<Output>> {
    let spec = config.calibration.as_ref().expect("validated");
    let scenario = config.scenario(spec.n);
    Ok(match spec.study {
        Study::Validity => {
            let report = validity_study(&scenario)?;
            info!("max deviation below the diagonal {:.4}", report.max_deviation());
            vec![
                Output::json("report.json", &report)?,
                Output::csv("cdf.csv", |w| report.write_cdf_csv(w))?,
            ]
        }
        Study::Hypotheses => {
            if config.hypotheses.is_empty() {
                return Err(Error::Config("the hypotheses study needs 'hypotheses'".into()));
            }
            let hs: Vec<Hypothesis> = config.hypotheses.iter().map(Hypothesis::from).collect();
            let budget = SearchBudget {
                seed: derive_seed(config.seed, &[config.budget.seed]),
                ..config.budget
            };
            let report = hypothesis_calibration(&scenario, &hs, &budget)?;
            vec![
                Output::json("hypotheses.json", &report)?,
                Output::csv("cdf.csv", |w| report.write_cdf_csv(w))?,
            ]
        }
        Study::Timing => vec![Output::json("report.json", &timing_accuracy_study(&scenario)?)?],
    })
}

/// Stage every file as a temporary in `dir`, then rename them all into
/// place, so a failed run leaves no partial output.
pub fn write_outputs(dir: &Path, header: &Header, outputs: &[Output]) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir)?;
    let mut staged = Vec::with_capacity(outputs.len());
    for o in outputs {
        let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
        tmp.write_all(&o.bytes(header)?)?;
        tmp.as_file().sync_all()?;
        staged.push((tmp, dir.join(o.name())));
    }
    staged
        .into_iter()
        .map(|(tmp, path)| {
            tmp.persist(&path).map_err(|e| Error::Io(e.error))?;
            Ok(path)
        })
        .collect()
}

/// Checks that depend on the contour method rather than the command.
pub(crate) fn check_method(model: &ModelSpec, method: ContourMethod, quantile: Option<f64>) -> Result<()> {
    let bad = |m: &str| Err(Error::Config(m.to_string()));
    match method {
        ContourMethod::Exact if *model != ModelSpec::Binomial => bad("the exact contour needs the binomial model"),
        ContourMethod::Bootstrap if !quantile.is_some_and(|t| t > 0.0 && t < 1.0) => {
            bad("the bootstrap method needs a quantile level in (0, 1)")
        }
        ContourMethod::Censored if !matches!(model, ModelSpec::LogNormal { .. }) => {
            bad("the censored method supports the log-normal model")
        }
        _ => Ok(()),
    }
}

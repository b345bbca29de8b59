use std::io::Write;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::scenario::{Approximation, ContourMethod, Replication, Scenario};
use crate::contour::{grid_eval, McContour};
use crate::error::{Error, Result};
use crate::inference::{upper_probability, Hypothesis, SearchBudget};
use crate::rng::derive_seed;

/// Studies with more failed replications than this fraction are errors.
pub const MAX_FAILURE_RATE: f64 = 0.05;

/// Fraction of `sorted` values ≤ α, for each α.
pub fn empirical_cdf(sorted: &[f64], alphas: &[f64]) -> Vec<f64> {
    alphas
        .iter()
        .map(|&a| sorted.partition_point(|&v| v <= a) as f64 / sorted.len().max(1) as f64)
        .collect()
}

/// Two binomial standard errors at level α with R replications.
pub fn validity_margin(alpha: f64, replications: usize) -> f64 {
    2.0 * (alpha * (1.0 - alpha) / replications as f64).sqrt()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationReport {
    /// Contour-at-truth values, sorted.
    pub values: Vec<f64>,
    pub alphas: Vec<f64>,
    pub cdf: Vec<f64>,
    /// Per-replication seconds (fit and evaluation), in replication order.
    pub timings: Vec<f64>,
    /// ξ̂ per successful replication, in replication order.
    pub xi_hats: Vec<Vec<f64>>,
    pub iterations: Vec<usize>,
    pub failures: usize,
    pub replications: usize,
}

impl CalibrationReport {
    /// Largest |CDF(α) − α| over the report's α levels.
    pub fn max_deviation(&self) -> f64 {
        self.alphas
            .iter()
            .zip(&self.cdf)
            .map(|(a, c)| (c - a).abs())
            .fold(0.0, f64::max)
    }

    pub fn cdf_at(&self, alpha: f64) -> f64 {
        empirical_cdf(&self.values, &[alpha])[0]
    }

    /// Columns: alpha, cdf, bound (α + two standard errors).
    pub fn write_cdf_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["alpha", "cdf", "bound"])?;
        let r = self.values.len().max(1);
        for (a, c) in self.alphas.iter().zip(&self.cdf) {
            w.write_record([a.to_string(), c.to_string(), (a + validity_margin(*a, r)).to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}

fn collect_failures<T>(results: Vec<Result<T>>, total: usize) -> Result<(Vec<T>, usize)> {
    let mut ok = Vec::with_capacity(results.len());
    let mut failed = 0;
    for r in results {
        match r {
            Ok(v) => ok.push(v),
            Err(e) => {
                log::warn!("replication failed: {e}");
                failed += 1;
            }
        }
    }
    if failed as f64 > MAX_FAILURE_RATE * total as f64 {
        return Err(Error::StudyFailed { failed, total });
    }
    Ok((ok, failed))
}

/// Distribution of π_X(Θ) over replications. Replication r draws its data
/// and all Monte Carlo from seeds derived from (seed, r), so the report is
/// the same for any thread count.
pub fn validity_study(scenario: &Scenario) -> Result<CalibrationReport> {
    scenario.validate()?;
    let model = scenario.build_model()?;
    let results: Vec<Result<Replication>> = (0..scenario.replications)
        .into_par_iter()
        .map(|r| scenario.replicate(model.as_ref(), r))
        .collect();
    let (reps, failures) = collect_failures(results, scenario.replications)?;
    let mut values: Vec<f64> = reps.iter().map(|r| r.value).collect();
    values.sort_by(f64::total_cmp);
    Ok(CalibrationReport {
        cdf: empirical_cdf(&values, &scenario.alphas),
        values,
        alphas: scenario.alphas.clone(),
        timings: reps.iter().map(|r| r.seconds).collect(),
        xi_hats: reps.iter().filter_map(|r| r.xi_hat.clone()).collect(),
        iterations: reps.iter().filter_map(|r| r.iterations).collect(),
        failures,
        replications: scenario.replications,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HypothesisCurve {
    /// Upper probabilities Π̄(H) over replications, sorted.
    pub values: Vec<f64>,
    pub cdf: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HypothesisReport {
    pub alphas: Vec<f64>,
    pub curves: Vec<HypothesisCurve>,
    pub failures: usize,
    pub replications: usize,
}

impl HypothesisReport {
    /// Columns: alpha, then one CDF column per hypothesis.
    pub fn write_cdf_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["alpha".to_string()];
        header.extend((1..=self.curves.len()).map(|k| format!("h{k}")));
        w.write_record(&header)?;
        for (i, a) in self.alphas.iter().enumerate() {
            let mut row = vec![a.to_string()];
            row.extend(self.curves.iter().map(|c| c.cdf[i].to_string()));
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// CDF curves α ↦ P{Π̄_X(H_k) ≤ α} for hypotheses true at the scenario's
/// truth. Contours without a closed form use the anchored Gaussian as the
/// search proposal.
pub fn hypothesis_calibration(
    scenario: &Scenario,
    hypotheses: &[Hypothesis],
    budget: &SearchBudget,
) -> Result<HypothesisReport> {
    scenario.validate()?;
    let model = scenario.build_model()?;
    for (k, h) in hypotheses.iter().enumerate() {
        h.validate(model.dim())
            .map_err(|e| Error::Config(format!("hypothesis {}: {e}", k + 1)))?;
        if !h.contains(&scenario.truth) {
            return Err(Error::Config(format!("hypothesis {} is false at the truth", k + 1)));
        }
    }
    let results: Vec<Result<Vec<f64>>> = (0..scenario.replications)
        .into_par_iter()
        .map(|r| {
            let data = scenario.simulate(model.as_ref(), r);
            let prepared = scenario.prepare(model.as_ref(), &data, r)?;
            let contour = prepared.contour();
            let proposal = scenario.search_proposal(model.as_ref(), &data, contour)?;
            let budget = SearchBudget {
                seed: derive_seed(budget.seed, &[r as u64]),
                ..*budget
            };
            hypotheses
                .iter()
                .map(|h| {
                    let p = proposal.as_ref().map(|f| f as &dyn crate::family::VariationalFamily);
                    Ok(upper_probability(contour, h, &budget, p)?.value)
                })
                .collect()
        })
        .collect();
    let (reps, failures) = collect_failures(results, scenario.replications)?;
    let curves = (0..hypotheses.len())
        .map(|k| {
            let mut values: Vec<f64> = reps.iter().map(|r| r[k]).collect();
            values.sort_by(f64::total_cmp);
            HypothesisCurve {
                cdf: empirical_cdf(&values, &scenario.alphas),
                values,
            }
        })
        .collect();
    Ok(HypothesisReport {
        alphas: scenario.alphas.clone(),
        curves,
        failures,
        replications: scenario.replications,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimingRecord {
    pub naive_seconds: f64,
    pub approx_seconds: f64,
    pub l1: f64,
    pub iterations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimingReport {
    pub n: usize,
    pub records: Vec<TimingRecord>,
    /// Mean of naive/approximate time ratios.
    pub relative_time: f64,
    pub mean_l1: f64,
    pub failures: usize,
}

/// Naive grid evaluation versus fit-then-evaluate on the same datasets and
/// grid. Replications run in turn, both methods on one dedicated thread;
/// data simulation is not timed.
pub fn timing_accuracy_study(scenario: &Scenario) -> Result<TimingReport> {
    scenario.validate()?;
    if scenario.contour != ContourMethod::Naive || scenario.approximation == Approximation::None {
        return Err(Error::Config(
            "timing study compares the naive contour with an approximation".into(),
        ));
    }
    if scenario.grid.is_empty() {
        return Err(Error::Config("timing study needs an evaluation grid".into()));
    }
    let model = scenario.build_model()?;
    // sequential: a worker waiting on a foreign pool steals from its own
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(1)
        .build()
        .map_err(|e| Error::Config(e.to_string()))?;
    let results: Vec<Result<TimingRecord>> = (0..scenario.replications)
        .map(|r| {
            let data = scenario.simulate(model.as_ref(), r);
            let grid_seed = derive_seed(scenario.seed, &[r as u64, 4]);

            let (naive_grid, naive_seconds) = pool.install(|| {
                let start = Instant::now();
                let naive = McContour::new(model.as_ref(), data.clone(), scenario.sa.m_inner)?;
                let grid = grid_eval(&naive, &scenario.grid, grid_seed, None)?;
                Ok::<_, Error>((grid, start.elapsed().as_secs_f64()))
            })?;

            let (approx_grid, approx_seconds, iterations) = pool.install(|| {
                let start = Instant::now();
                let prepared = scenario.prepare(model.as_ref(), &data, r)?;
                let grid = grid_eval(prepared.contour(), &scenario.grid, grid_seed, None)?;
                let iterations = prepared.fitted.as_ref().map_or(0, |f| f.trace().iterations());
                Ok::<_, Error>((grid, start.elapsed().as_secs_f64(), iterations))
            })?;

            Ok(TimingRecord {
                naive_seconds,
                approx_seconds,
                l1: naive_grid.l1_distance(&approx_grid),
                iterations,
            })
        })
        .collect();
    let (records, failures) = collect_failures(results, scenario.replications)?;
    let k = records.len().max(1) as f64;
    Ok(TimingReport {
        n: scenario.n,
        relative_time: records.iter().map(|r| r.naive_seconds / r.approx_seconds).sum::<f64>() / k,
        mean_l1: records.iter().map(|r| r.l1).sum::<f64>() / k,
        records,
        failures,
    })
}

//! Naive Monte Carlo contour versus its fitted Gaussian approximation for
//! the correlation of a standard bivariate normal: wall time and L1 distance
//! on a 100-node grid, as n grows.

use imvar::approx::SAConfig;
use imvar::calibration::{timing_accuracy_study, Approximation, ContourMethod, Scenario};
use imvar::contour::AxisSpec;
use imvar::model::ModelSpec;

fn main() -> imvar::Result<()> {
    println!(
        "{:>5} {:>10} {:>10} {:>12} {:>12} {:>6}",
        "n", "rel.time", "mean L1", "naive s", "approx s", "iters"
    );
    for n in [50, 100, 200] {
        let scenario = Scenario {
            model: ModelSpec::BivariateNormal,
            truth: vec![0.5],
            generator: None,
            n,
            replications: 10,
            contour: ContourMethod::Naive,
            approximation: Approximation::Vector,
            sa: SAConfig {
                m_inner: 500,
                ..SAConfig::default()
            },
            grid: vec![AxisSpec::new(0.0, 0.95, 100)],
            covariates: None,
            quantile: None,
            censoring: None,
            alphas: vec![0.5],
            seed: 1,
        };
        let report = timing_accuracy_study(&scenario)?;
        let k = report.records.len() as f64;
        let naive = report.records.iter().map(|r| r.naive_seconds).sum::<f64>() / k;
        let approx = report.records.iter().map(|r| r.approx_seconds).sum::<f64>() / k;
        let iters = report.records.iter().map(|r| r.iterations as f64).sum::<f64>() / k;
        println!(
            "{n:>5} {:>10.2} {:>10.4} {naive:>12.5} {approx:>12.5} {iters:>6.1}",
            report.relative_time, report.mean_l1
        );
    }
    Ok(())
}

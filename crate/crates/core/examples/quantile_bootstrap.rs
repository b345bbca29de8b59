//! Nonparametric IM for a quantile: bootstrap calibration of the excess
//! check-loss risk, without a model for the data.

use imvar::approx::SAConfig;
use imvar::calibration::{validity_study, Approximation, ContourMethod, Scenario};
use imvar::contour::PossibilityContour;
use imvar::model::{Gamma, GammaParam, Model, ModelSpec};
use imvar::nuisance::{quantile_family, EmpiricalRiskContour, RiskSpec};
use imvar::rng::stream;

fn main() -> imvar::Result<()> {
    let tau = 0.25;
    let xs = Gamma::new(GammaParam::ShapeScale)
        .sample(&[4.0, 1.0], 100, &mut stream(1, &[]))
        .responses;
    let contour = EmpiricalRiskContour::new(xs.clone(), RiskSpec::quantile(tau)?.with_bootstrap(500), 2)?;
    let gauss = quantile_family(&xs, tau, 1.0)?;
    println!("sample quantile = {:.3}", contour.theta_hat()[0]);
    println!("theta   bootstrap  gaussian");
    for theta in [2.0, 2.2, 2.4, 2.53, 2.7, 2.9, 3.1] {
        println!(
            "{theta:.2}    {:.3}      {:.3}",
            contour.evaluate(&[theta], 0).value,
            gauss.contour(&[theta])
        );
    }

    let scenario = Scenario {
        model: ModelSpec::Gamma {
            param: GammaParam::ShapeScale,
        },
        truth: vec![2.5353],
        generator: Some(vec![4.0, 1.0]),
        n: 100,
        replications: 250,
        contour: ContourMethod::Bootstrap,
        approximation: Approximation::None,
        sa: SAConfig {
            m_inner: 500,
            ..SAConfig::default()
        },
        grid: vec![],
        covariates: None,
        quantile: Some(tau),
        censoring: None,
        alphas: vec![0.05, 0.1, 0.25, 0.5],
        seed: 3,
    };
    let report = validity_study(&scenario)?;
    for (a, c) in report.alphas.iter().zip(&report.cdf) {
        println!("P(pi(true quantile) <= {a:.2}) = {c:.3}");
    }
    Ok(())
}

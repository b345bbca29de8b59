//! Gamma model on the log scale: naive Monte Carlo contour, vector-ξ
//! Gaussian fitted along the eigen-directions of the observed information,
//! and a small validity check of the fitted approximation.

use imvar::approx::{fit_gaussian_vector, SAConfig};
use imvar::calibration::{validity_study, Approximation, ContourMethod, Scenario};
use imvar::contour::{McContour, PossibilityContour};
use imvar::model::{Gamma, GammaParam, Model, ModelSpec};
use imvar::rng::stream;

fn main() -> imvar::Result<()> {
    let model = Gamma::new(GammaParam::LogShapeLogScale);
    let truth = [7f64.ln(), 3f64.ln()];
    let data = model.sample(&truth, 25, &mut stream(3, &[]));
    let contour = McContour::new(model, data.clone(), 500)?;

    let (fit, trace) = fit_gaussian_vector(&model, &data, &contour, &SAConfig::with_seed(4))?;
    println!("theta_hat = {:.3?}", fit.anchor.mean);
    println!("eigenvalues = {:.3?}", fit.eigenvalues);
    println!("xi_hat = {:.3?} after {} iterations", fit.xi, trace.iterations());
    for (plus, minus) in fit.boundary_points(0.1)? {
        println!(
            "  boundary pi = {:.3} / {:.3}",
            contour.evaluate(&plus, 9).value,
            contour.evaluate(&minus, 9).value
        );
    }

    let scenario = Scenario {
        model: ModelSpec::Gamma {
            param: GammaParam::LogShapeLogScale,
        },
        truth: truth.to_vec(),
        generator: None,
        n: 25,
        replications: 100,
        contour: ContourMethod::Naive,
        approximation: Approximation::Vector,
        sa: SAConfig {
            m_inner: 200,
            ..SAConfig::default()
        },
        grid: vec![],
        covariates: None,
        quantile: None,
        censoring: None,
        alphas: vec![0.1, 0.25, 0.5, 0.75, 0.9],
        seed: 5,
    };
    let report = validity_study(&scenario)?;
    for (a, c) in report.alphas.iter().zip(&report.cdf) {
        println!("P(pi(truth) <= {a:.2}) = {c:.3}");
    }
    Ok(())
}

//! Poisson log-linear regression with two standardized covariates:
//! upper and lower probabilities of three hypotheses on one dataset, then
//! their calibration over repeated samples.

use imvar::approx::{fit_gaussian_scalar, SAConfig};
use imvar::calibration::{hypothesis_calibration, Approximation, ContourMethod, CovariateDesign, Scenario};
use imvar::contour::McContour;
use imvar::inference::{lower_probability, upper_probability, Hypothesis, SearchBudget};
use imvar::model::{Model, ModelSpec, PoissonLogLinear};
use imvar::rng::stream;

fn hypotheses() -> Vec<(&'static str, Hypothesis)> {
    let inf = f64::INFINITY;
    vec![
        (
            "theta1 < 0.5",
            Hypothesis::Box {
                lo: vec![-inf, -inf, -inf],
                hi: vec![inf, 0.5, inf],
            },
        ),
        (
            "0 < theta2 < 0.5",
            Hypothesis::Box {
                lo: vec![-inf, -inf, 0.0],
                hi: vec![inf, inf, 0.5],
            },
        ),
        (
            "theta1 > theta2",
            Hypothesis::HalfSpace {
                a: vec![0.0, -1.0, 1.0],
                b: 0.0,
            },
        ),
    ]
}

fn main() -> imvar::Result<()> {
    let truth = [1.0, 0.25, 0.1];
    let design = CovariateDesign { columns: 2, seed: 17 };
    let model = PoissonLogLinear::with_intercept(&design.matrix(25));
    let data = model.sample(&truth, 25, &mut stream(1, &[]));
    let contour = McContour::new(&model, data.clone(), 500)?;
    let (fit, _) = fit_gaussian_scalar(&model, &data, &contour, &SAConfig::with_seed(2))?;
    println!("theta_hat = {:.3?}, xi_hat = {:.3}", fit.anchor.mean, fit.xi);

    let budget = SearchBudget {
        candidates: 500,
        seed: 3,
        ..SearchBudget::default()
    };
    for (name, h) in hypotheses() {
        let naive_upper = upper_probability(&contour, &h, &budget, Some(&fit))?.value;
        let upper = upper_probability(&fit, &h, &budget, None)?.value;
        let lower = lower_probability(&fit, &h, &budget, None)?.value;
        println!("{name:>18}: naive upper {naive_upper:.3}, fitted upper {upper:.3}, lower {lower:.3}");
    }

    let scenario = Scenario {
        model: ModelSpec::Poisson,
        truth: truth.to_vec(),
        generator: None,
        n: 25,
        replications: 100,
        contour: ContourMethod::Naive,
        approximation: Approximation::Scalar,
        sa: SAConfig {
            m_inner: 200,
            ..SAConfig::default()
        },
        grid: vec![],
        covariates: Some(design),
        quantile: None,
        censoring: None,
        alphas: vec![0.05, 0.1, 0.25, 0.5],
        seed: 4,
    };
    let hs: Vec<Hypothesis> = hypotheses().into_iter().map(|(_, h)| h).collect();
    let report = hypothesis_calibration(&scenario, &hs, &budget)?;
    for ((name, _), curve) in hypotheses().iter().zip(&report.curves) {
        println!(
            "{name:>18}: P(upper <= alpha) at {:?} = {:.2?}",
            report.alphas, curve.cdf
        );
    }
    Ok(())
}

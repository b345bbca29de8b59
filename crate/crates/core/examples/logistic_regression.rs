//! Logistic regression with one covariate: naive contour for the slope and
//! intercept, a vector-ξ Gaussian fit, and the marginal contour of the slope.

use imvar::approx::{fit_gaussian_vector, SAConfig};
use imvar::calibration::standardized_covariates;
use imvar::contour::{AxisSpec, McContour, PossibilityContour};
use imvar::inference::{marginal_contour, FeatureMap, SearchBudget};
use imvar::model::{Logistic, Model};
use imvar::rng::stream;

fn main() -> imvar::Result<()> {
    let n = 80;
    let model = Logistic::with_intercept(&standardized_covariates(n, 1, 11));
    let truth = [-0.5, 1.2];
    let data = model.sample(&truth, n, &mut stream(12, &[]));
    let contour = McContour::new(&model, data.clone(), 500)?;

    let (fit, trace) = fit_gaussian_vector(&model, &data, &contour, &SAConfig::with_seed(13))?;
    println!("theta_hat = {:.3?}", fit.anchor.mean);
    println!("xi_hat = {:.3?} after {} iterations", fit.xi, trace.iterations());
    println!(
        "pi(truth): naive {:.3}, fitted {:.3}",
        contour.evaluate(&truth, 1).value,
        fit.contour(&truth)
    );

    let slope = marginal_contour(
        &fit,
        &FeatureMap::coordinate(2, 1),
        &[AxisSpec::new(0.0, 2.5, 11)],
        &SearchBudget::default(),
        None,
    )?;
    for i in 0..slope.len() {
        println!("slope {:.2}: {:.3}", slope.node(i)[0], slope.values[i]);
    }
    Ok(())
}

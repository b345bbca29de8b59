//! Multinomial cell probabilities: the Dirichlet family fitted to the naive
//! contour, and plausibility of hypotheses about the cells.

use imvar::approx::{fit_scalar, SAConfig};
use imvar::contour::{McContour, PossibilityContour};
use imvar::family::{DirichletContour, DirichletFamily};
use imvar::inference::{upper_probability, Hypothesis, SearchBudget};
use imvar::model::Multinomial;

fn main() -> imvar::Result<()> {
    let counts = [12, 7, 21];
    let model = Multinomial::new(3);
    let data = Multinomial::dataset(&counts);
    let contour = McContour::new(model, data.clone(), 500)?;

    let family = DirichletFamily::from_counts(&model.counts(&data), 1.0)?;
    let (fit, trace) = fit_scalar(&family, &contour, &SAConfig::with_seed(2))?;
    println!("xi_hat = {:.3} after {} iterations", fit.xi, trace.iterations());
    println!("concentration = {:.2?}", fit.concentration());

    let approx = DirichletContour::new(fit.clone(), 2000);
    for theta in [[0.3, 0.175, 0.525], [0.2, 0.2, 0.6], [1.0 / 3.0; 3]] {
        println!(
            "pi({theta:.3?}): naive {:.3}, Dirichlet {:.3}",
            contour.evaluate(&theta, 1).value,
            approx.evaluate(&theta, 1).value
        );
    }

    let budget = SearchBudget {
        seed: 3,
        ..SearchBudget::default()
    };
    let first_smallest = Hypothesis::predicate(3, |t| t[0] < t[1] && t[0] < t[2]);
    let r = upper_probability(&approx, &first_smallest, &budget, Some(&fit))?;
    println!("upper probability that cell 1 is the smallest: {:.3}", r.value);
    Ok(())
}

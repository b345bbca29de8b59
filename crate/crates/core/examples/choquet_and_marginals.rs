//! Derived inference from a fitted Gaussian contour: marginal contours for
//! linear and nonlinear features, and Choquet upper expectations of losses.

use std::sync::Arc;

use imvar::contour::AxisSpec;
use imvar::family::GaussianScalarFamily;
use imvar::inference::{
    choquet_upper_expectation, marginal_contour, upper_probability, ChoquetSpec, FeatureMap, Hypothesis, SearchBudget,
};
use imvar::model::Anchor;
use nalgebra::DMatrix;

fn main() -> imvar::Result<()> {
    let j = DMatrix::from_row_slice(2, 2, &[4.0, 1.0, 1.0, 2.0]);
    let contour = GaussianScalarFamily::new(Anchor::new(vec![1.0, 0.5], j)?, 1.1)?;
    let budget = SearchBudget {
        seed: 1,
        ..SearchBudget::default()
    };

    let sum = FeatureMap::Linear(DMatrix::from_row_slice(1, 2, &[1.0, 1.0]));
    let ratio = FeatureMap::Nonlinear {
        out_dim: 1,
        map: Arc::new(|t: &[f64]| vec![t[1] / t[0]]),
    };
    let axis = [AxisSpec::new(-1.0, 2.0, 7)];
    let lin = marginal_contour(&contour, &sum, &[AxisSpec::new(0.0, 3.0, 7)], &budget, None)?;
    let non = marginal_contour(&contour, &ratio, &axis, &budget, Some(&contour))?;
    println!("theta1 + theta2: {:.3?}", lin.values);
    println!("theta2 / theta1: {:.3?}", non.values);

    let h = Hypothesis::HalfSpace {
        a: vec![1.0, -1.0],
        b: 0.0,
    };
    println!(
        "upper probability of theta1 <= theta2: {:.3}",
        upper_probability(&contour, &h, &budget, None)?.value
    );

    let losses: [(&str, ChoquetSpec); 3] = [
        ("|theta1 - 1|", ChoquetSpec::new(|t: &[f64]| (t[0] - 1.0).abs())),
        (
            "(theta1 - theta2)^2",
            ChoquetSpec::new(|t: &[f64]| (t[0] - t[1]).powi(2)),
        ),
        (
            "1{theta2 > 1}",
            ChoquetSpec::new(|t: &[f64]| f64::from(u8::from(t[1] > 1.0))),
        ),
    ];
    for (name, spec) in losses {
        let r = choquet_upper_expectation(&contour, &spec.with_budget(budget), None)?;
        println!("upper expectation of {name}: {:.4}", r.value);
    }
    Ok(())
}

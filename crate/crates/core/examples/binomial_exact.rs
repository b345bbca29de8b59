//! Binomial IM: exact contour by enumeration, its Monte Carlo estimate, the
//! 90% plausibility interval, and the Gaussian fitted to match its credal
//! mass.

use imvar::approx::{fit_gaussian_scalar, SAConfig};
use imvar::contour::{alpha_cut, grid_eval, AxisSpec, ExactBinomialContour, McContour, PossibilityContour};
use imvar::model::Bernoulli;

fn main() -> imvar::Result<()> {
    let (n, s) = (15, 6);
    let data = Bernoulli::dataset(n, s);
    let exact = ExactBinomialContour::new(n as u64, s as u64);
    let mc = McContour::new(Bernoulli, data.clone(), 10_000)?;

    println!("theta   exact    mc(10^4)");
    for theta in [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7] {
        println!(
            "{theta:.2}  {:.4}   {:.4}",
            exact.evaluate(&[theta], 0).value,
            mc.evaluate(&[theta], 7).value
        );
    }

    let axis = AxisSpec::new(0.001, 0.999, 999);
    let grid = grid_eval(&exact, &[axis], 0, None)?;
    let cut = alpha_cut(&grid, 0.1);
    let (lo, hi) = (grid.node(cut[0])[0], grid.node(*cut.last().unwrap())[0]);
    println!("90% plausibility interval: [{lo:.3}, {hi:.3}]");

    let (fit, trace) = fit_gaussian_scalar(&Bernoulli, &data, &exact, &SAConfig::with_seed(1))?;
    println!(
        "fitted N({:.3}, ({:.3})^2): xi = {:.4} after {} iterations ({:?})",
        fit.anchor.mean[0],
        fit.covariance()[(0, 0)].sqrt(),
        fit.xi,
        trace.iterations(),
        trace.termination
    );
    Ok(())
}

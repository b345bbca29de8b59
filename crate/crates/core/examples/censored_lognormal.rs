//! Left-censored log-normal concentrations (values below a detection limit
//! are reported at the limit). The censoring distribution is estimated by
//! Kaplan-Meier on swapped labels and plugged into the Monte Carlo contour.

use imvar::approx::{fit_gaussian_vector, SAConfig};
use imvar::contour::{grid_eval, AxisSpec, PossibilityContour};
use imvar::model::{Dataset, LogNormal, LogNormalParam, Model};
use imvar::nuisance::{censored_plugin_contour, kaplan_meier_swapped, CensoringDistribution};
use imvar::rng::stream;

fn main() -> imvar::Result<()> {
    let model = LogNormal::new(LogNormalParam::MeanVariance);
    let truth = [0.5, 1.0];
    let limits = CensoringDistribution::new(vec![0.5, 1.0, 2.0], vec![0.3, 0.5, 0.2])?;
    let mut rng = stream(4, &[]);
    let (z, observed): (Vec<f64>, Vec<bool>) = model
        .sample(&truth, 40, &mut rng)
        .responses
        .into_iter()
        .map(|y| {
            let c = limits.sample(&mut rng);
            (y.max(c), y >= c)
        })
        .unzip();
    println!(
        "{} of {} observations censored",
        observed.iter().filter(|o| !**o).count(),
        z.len()
    );

    let ghat = kaplan_meier_swapped(&z, &observed)?;
    println!("G_hat support {:.3?}", ghat.support);
    println!("G_hat masses  {:.3?} (true {:.3?})", ghat.masses, limits.masses);

    let data = Dataset::new(z).with_observed(observed)?;
    let contour = censored_plugin_contour(&model, data.clone(), ghat, 500)?;
    println!("pi(truth) = {:.3}", contour.evaluate(&truth, 1).value);

    let (fit, trace) = fit_gaussian_vector(&model, &data, &contour, &SAConfig::with_seed(5))?;
    println!(
        "theta_hat = {:.3?}, xi_hat = {:.3?} ({} iterations)",
        fit.anchor.mean,
        fit.xi,
        trace.iterations()
    );

    let axes = [AxisSpec::new(-0.5, 1.5, 9), AxisSpec::new(0.3, 2.5, 9)];
    let grid = grid_eval(&contour, &axes, 6, None)?;
    let approx = grid_eval(&fit, &axes, 6, None)?;
    println!(
        "L1 distance between plug-in and fitted contours: {:.4}",
        grid.l1_distance(&approx)
    );
    Ok(())
}

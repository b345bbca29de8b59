//! Profile IM for the mean of a gamma distribution with the shape as a
//! nuisance parameter, compared with its delta-method Gaussian.

use imvar::contour::{grid_eval, AxisSpec};
use imvar::model::{Gamma, GammaParam, Model};
use imvar::nuisance::{ProfileContour, ProfileSpec};
use imvar::rng::stream;

fn main() -> imvar::Result<()> {
    let model = Gamma::new(GammaParam::ShapeScale);
    let data = model.sample(&[2.0, 1.5], 30, &mut stream(6, &[]));
    let spec = ProfileSpec::gamma_mean(model);
    let contour = ProfileContour::new(model, data, spec, 500)?;
    println!(
        "theta_hat = {:.3?}, mean_hat = {:.3}",
        contour.theta_hat(),
        contour.phi_hat()
    );

    let probe = contour.probe_report(contour.phi_hat() * 1.3, 1)?;
    println!(
        "probes at 1.3 x mean_hat: value {:.3}, spread {:.3}",
        probe.value(),
        probe.spread()
    );

    let gauss = contour.family(1.0)?;
    let grid = grid_eval(&contour, &[AxisSpec::new(1.5, 4.5, 13)], 2, None)?;
    println!("mean    profile  gaussian");
    for i in 0..grid.len() {
        let phi = grid.node(i);
        println!("{:.2}    {:.3}    {:.3}", phi[0], grid.values[i], gauss.contour(&phi));
    }
    Ok(())
}

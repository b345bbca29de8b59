//! Many normal means with a lasso penalty: five signals among fifty means.
//! The vector-ξ fit inflates the directions of the signals relative to the
//! thresholded noise coordinates.

use imvar::approx::{fit_gaussian_vector, SAConfig};
use imvar::contour::{McContour, PossibilityContour};
use imvar::model::{Model, NormalMeans};
use imvar::rng::stream;

fn main() -> imvar::Result<()> {
    let d = 50;
    let model = NormalMeans::new(d, 1.0, NormalMeans::universal_lambda(d, 1.0));
    let mut truth = vec![0.0; d];
    truth[..5].fill(5.0);
    let data = model.sample(&truth, d, &mut stream(8, &[]));
    let contour = McContour::new(model, data.clone(), 200)?;

    let config = SAConfig {
        m_inner: 200,
        ..SAConfig::with_seed(9)
    };
    let (fit, trace) = fit_gaussian_vector(&model, &data, &contour, &config)?;
    println!("lambda = {:.3}, {} iterations", model.lambda, trace.iterations());
    println!("penalized estimate (first 8): {:.2?}", &fit.anchor.mean[..8]);
    let signal = fit.xi[..5].iter().sum::<f64>() / 5.0;
    let noise = fit.xi[5..].iter().sum::<f64>() / (d - 5) as f64;
    println!("mean xi: signal {signal:.3}, noise {noise:.3}");
    println!(
        "pi(truth): naive {:.3}, fitted {:.3}",
        contour.evaluate(&truth, 1).value,
        fit.contour(&truth)
    );
    Ok(())
}

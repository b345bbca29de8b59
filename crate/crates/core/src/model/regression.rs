//! Generalized linear models conditioned on a fixed design matrix.
//!
//! The design lives in the model; datasets carry only responses. Simulated
//! datasets therefore reuse the same covariates, which are ancillary.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Distribution, Poisson};

use super::{Dataset, Domain, Model};
use crate::error::{Error, Result};
use crate::rng::SimRng;

fn design_from(covariates: &DMatrix<f64>, intercept: bool) -> DMatrix<f64> {
    if !intercept {
        return covariates.clone();
    }
    let n = covariates.nrows();
    let mut x = DMatrix::from_element(n, covariates.ncols() + 1, 1.0);
    x.view_mut((0, 1), (n, covariates.ncols())).copy_from(covariates);
    x
}

fn linear_predictor(design: &DMatrix<f64>, theta: &[f64]) -> DVector<f64> {
    design * DVector::from_column_slice(theta)
}

/// Newton–Raphson for a canonical-link GLM. `mean` maps η to E[y], `ll`
/// evaluates the log-likelihood.
fn irls(
    design: &DMatrix<f64>,
    y: &[f64],
    start: DVector<f64>,
    mean: impl Fn(f64) -> f64,
    variance: impl Fn(f64) -> f64,
    ll: impl Fn(&DVector<f64>) -> f64,
    label: &str,
) -> Result<DVector<f64>> {
    let mut beta = start;
    let mut current = ll(&beta);
    for _ in 0..100 {
        let eta = design * &beta;
        let resid = DVector::from_iterator(y.len(), y.iter().zip(eta.iter()).map(|(&yi, &e)| yi - mean(e)));
        let score = design.transpose() * resid;
        let w = DVector::from_iterator(eta.len(), eta.iter().map(|&e| variance(e)));
        let mut info = DMatrix::zeros(design.ncols(), design.ncols());
        for (i, row) in design.row_iter().enumerate() {
            info += row.transpose() * row * w[i];
        }
        if score.amax() < 1e-10 * (1.0 + current.abs()) {
            return Ok(beta);
        }
        let step = info
            .cholesky()
            .ok_or_else(|| Error::DegenerateMle(format!("{label}: information lost rank during fitting")))?
            .solve(&score);
        let mut t = 1.0;
        let mut accepted = false;
        for _ in 0..50 {
            let trial = &beta + &step * t;
            let v = ll(&trial);
            if v.is_finite() && v >= current {
                let gain = v - current;
                beta = trial;
                current = v;
                accepted = true;
                if gain < 1e-15 * (1.0 + current.abs()) && step.amax() * t < 1e-10 {
                    return Ok(beta);
                }
                break;
            }
            t *= 0.5;
        }
        if !accepted {
            return Ok(beta);
        }
        if beta.amax() > 1e3 {
            return Err(Error::DegenerateMle(format!("{label}: estimates diverge (separation)")));
        }
    }
    Err(Error::NonConvergence(format!("{label}: Newton iterations exhausted")))
}

fn glm_information(design: &DMatrix<f64>, eta: &DVector<f64>, variance: impl Fn(f64) -> f64) -> DMatrix<f64> {
    let mut info = DMatrix::zeros(design.ncols(), design.ncols());
    for (i, row) in design.row_iter().enumerate() {
        info += row.transpose() * row * variance(eta[i]);
    }
    info
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// log(1 + e^z) without overflow.
fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

/// Logistic regression: y_i ~ Bernoulli(F(x_iᵀθ)), F the logistic cdf.
#[derive(Debug, Clone)]
pub struct Logistic {
    design: DMatrix<f64>,
}

impl Logistic {
    pub fn new(design: DMatrix<f64>) -> Self {
        Self { design }
    }

    /// Prepend an intercept column to the covariates.
    pub fn with_intercept(covariates: &DMatrix<f64>) -> Self {
        Self::new(design_from(covariates, true))
    }

    pub fn design(&self) -> &DMatrix<f64> {
        &self.design
    }

    fn ll_eta(&self, y: &[f64], eta: &DVector<f64>) -> f64 {
        y.iter().zip(eta.iter()).map(|(&yi, &e)| yi * e - softplus(e)).sum()
    }
}

impl Model for Logistic {
    fn name(&self) -> &'static str {
        "logistic"
    }

    fn dim(&self) -> usize {
        self.design.ncols()
    }

    fn domain(&self) -> Domain {
        Domain::Unconstrained
    }

    fn log_likelihood(&self, data: &Dataset, theta: &[f64]) -> f64 {
        if !theta.iter().all(|v| v.is_finite()) {
            return f64::NEG_INFINITY;
        }
        self.ll_eta(&data.responses, &linear_predictor(&self.design, theta))
    }

    fn sample(&self, theta: &[f64], n: usize, rng: &mut SimRng) -> Dataset {
        assert_eq!(n, self.design.nrows(), "logistic sample size is fixed by the design");
        let eta = linear_predictor(&self.design, theta);
        Dataset::new(
            eta.iter()
                .map(|&e| if rng.random::<f64>() < sigmoid(e) { 1.0 } else { 0.0 })
                .collect(),
        )
    }

    fn mle(&self, data: &Dataset) -> Result<Vec<f64>> {
        let y = &data.responses;
        let ones = y.iter().filter(|&&v| v == 1.0).count();
        if ones == 0 || ones == y.len() {
            return Err(Error::DegenerateMle("logistic: all responses identical".into()));
        }
        let beta = irls(
            &self.design,
            y,
            DVector::zeros(self.dim()),
            sigmoid,
            |e| {
                let p = sigmoid(e);
                p * (1.0 - p)
            },
            |b| self.ll_eta(y, &(&self.design * b)),
            "logistic",
        )?;
        let eta = &self.design * &beta;
        if y.iter().zip(eta.iter()).all(|(&yi, &e)| (yi - sigmoid(e)).abs() < 1e-6) {
            return Err(Error::DegenerateMle(
                "logistic: responses are perfectly separated".into(),
            ));
        }
        Ok(beta.as_slice().to_vec())
    }

    fn score(&self, data: &Dataset, theta: &[f64]) -> Vec<f64> {
        let eta = linear_predictor(&self.design, theta);
        let resid = DVector::from_iterator(
            eta.len(),
            data.responses.iter().zip(eta.iter()).map(|(&y, &e)| y - sigmoid(e)),
        );
        (self.design.transpose() * resid).as_slice().to_vec()
    }

    fn analytic_information(&self, _data: &Dataset, theta: &[f64]) -> Option<DMatrix<f64>> {
        let eta = linear_predictor(&self.design, theta);
        Some(glm_information(&self.design, &eta, |e| {
            let p = sigmoid(e);
            p * (1.0 - p)
        }))
    }
}

/// Poisson log-linear regression: log λ_i = x_iᵀθ.
#[derive(Debug, Clone)]
pub struct PoissonLogLinear {
    design: DMatrix<f64>,
}

impl PoissonLogLinear {
    pub fn new(design: DMatrix<f64>) -> Self {
        Self { design }
    }

    pub fn with_intercept(covariates: &DMatrix<f64>) -> Self {
        Self::new(design_from(covariates, true))
    }

    pub fn design(&self) -> &DMatrix<f64> {
        &self.design
    }

    fn ll_eta(&self, y: &[f64], eta: &DVector<f64>) -> f64 {
        y.iter().zip(eta.iter()).map(|(&yi, &e)| yi * e - e.exp()).sum()
    }
}

impl Model for PoissonLogLinear {
    fn name(&self) -> &'static str {
        "poisson"
    }

    fn dim(&self) -> usize {
        self.design.ncols()
    }

    fn domain(&self) -> Domain {
        Domain::Unconstrained
    }

    fn log_likelihood(&self, data: &Dataset, theta: &[f64]) -> f64 {
        if !theta.iter().all(|v| v.is_finite()) {
            return f64::NEG_INFINITY;
        }
        let v = self.ll_eta(&data.responses, &linear_predictor(&self.design, theta));
        if v.is_nan() {
            f64::NEG_INFINITY
        } else {
            v
        }
    }

    fn sample(&self, theta: &[f64], n: usize, rng: &mut SimRng) -> Dataset {
        assert_eq!(n, self.design.nrows(), "Poisson sample size is fixed by the design");
        let eta = linear_predictor(&self.design, theta);
        Dataset::new(
            eta.iter()
                .map(|&e| {
                    let lambda = e.exp();
                    if lambda > 0.0 && lambda.is_finite() {
                        Poisson::new(lambda).map(|p| p.sample(rng)).unwrap_or(0.0)
                    } else {
                        0.0
                    }
                })
                .collect(),
        )
    }

    fn mle(&self, data: &Dataset) -> Result<Vec<f64>> {
        let y = &data.responses;
        let mean = y.iter().sum::<f64>() / y.len() as f64;
        if mean <= 0.0 {
            return Err(Error::DegenerateMle("poisson: all counts are zero".into()));
        }
        // start from the intercept-only fit when the first column is constant
        let mut start = DVector::zeros(self.dim());
        if self.design.column(0).iter().all(|&v| v == 1.0) {
            start[0] = mean.ln();
        }
        let beta = irls(
            &self.design,
            y,
            start,
            f64::exp,
            f64::exp,
            |b| self.ll_eta(y, &(&self.design * b)),
            "poisson",
        )?;
        Ok(beta.as_slice().to_vec())
    }

    fn score(&self, data: &Dataset, theta: &[f64]) -> Vec<f64> {
        let eta = linear_predictor(&self.design, theta);
        let resid = DVector::from_iterator(
            eta.len(),
            data.responses.iter().zip(eta.iter()).map(|(&y, &e)| y - e.exp()),
        );
        (self.design.transpose() * resid).as_slice().to_vec()
    }

    fn analytic_information(&self, _data: &Dataset, theta: &[f64]) -> Option<DMatrix<f64>> {
        let eta = linear_predictor(&self.design, theta);
        Some(glm_information(&self.design, &eta, f64::exp))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{fd_information, mle_and_information};
    use crate::rng::stream;
    use rand_distr::StandardNormal;

    fn covariates(n: usize, p: usize, seed: u64) -> DMatrix<f64> {
        let mut rng = stream(seed, &[]);
        DMatrix::from_fn(n, p, |_, _| StandardNormal.sample(&mut rng))
    }

    fn assert_close(a: &DMatrix<f64>, b: &DMatrix<f64>, rel: f64) {
        let scale = b.amax();
        assert!((a - b).amax() <= rel * scale, "{a} vs {b}");
    }

    #[test]
    fn logistic_stationary_with_matching_information() {
        let m = Logistic::with_intercept(&covariates(120, 1, 3));
        let data = m.sample(&[-0.5, 1.2], 120, &mut stream(4, &[]));
        let (theta, j) = mle_and_information(&m, &data).unwrap();
        let g = m.score(&data, &theta.values);
        assert!(g.iter().all(|v| v.abs() < 1e-8), "{g:?}");
        assert_close(&fd_information(&m, &data, &theta.values), &j, 1e-4);
    }

    #[test]
    fn poisson_stationary_with_matching_information() {
        let m = PoissonLogLinear::with_intercept(&covariates(40, 2, 5));
        let data = m.sample(&[1.0, 0.25, 0.1], 40, &mut stream(6, &[]));
        let (theta, j) = mle_and_information(&m, &data).unwrap();
        let best = m.log_likelihood(&data, &theta.values);
        let mut rng = stream(7, &[]);
        for _ in 0..200 {
            let t: Vec<f64> = theta
                .values
                .iter()
                .map(|v| v + 0.05 * rng.sample::<f64, _>(StandardNormal))
                .collect();
            assert!(m.log_likelihood(&data, &t) <= best + 1e-8);
        }
        assert_close(&fd_information(&m, &data, &theta.values), &j, 1e-4);
    }

    #[test]
    fn separated_logistic_data_is_degenerate() {
        let x = DMatrix::from_column_slice(6, 1, &[-3.0, -2.0, -1.0, 1.0, 2.0, 3.0]);
        let m = Logistic::with_intercept(&x);
        let data = Dataset::new(vec![0.0, 0.0, 0.0, 1.0, 1.0, 1.0]);
        assert!(m.mle(&data).is_err());
    }
}

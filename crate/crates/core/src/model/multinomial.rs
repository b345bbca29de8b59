use nalgebra::DMatrix;
use rand::Rng;

use super::{Dataset, Domain, Model};
use crate::error::{Error, Result};
use crate::rng::SimRng;

/// Multinomial with `categories` cells. Responses are category labels
/// `0..categories`; θ lives on the probability simplex.
#[derive(Debug, Clone, Copy)]
pub struct Multinomial {
    pub categories: usize,
}

impl Multinomial {
    pub fn new(categories: usize) -> Self {
        assert!(categories >= 2);
        Self { categories }
    }

    /// Labelled dataset reproducing the given cell counts.
    pub fn dataset(counts: &[usize]) -> Dataset {
        Dataset::new(
            counts
                .iter()
                .enumerate()
                .flat_map(|(k, &c)| std::iter::repeat_n(k as f64, c))
                .collect(),
        )
    }

    pub fn counts(&self, data: &Dataset) -> Vec<f64> {
        let mut c = vec![0.0; self.categories];
        for &y in &data.responses {
            let k = y as usize;
            if k < self.categories && y >= 0.0 {
                c[k] += 1.0;
            }
        }
        c
    }

    fn ll_counts(counts: &[f64], theta: &[f64]) -> f64 {
        counts
            .iter()
            .zip(theta)
            .map(|(&c, &t)| if c > 0.0 { c * t.ln() } else { 0.0 })
            .sum()
    }
}

impl Model for Multinomial {
    fn name(&self) -> &'static str {
        "multinomial"
    }

    fn dim(&self) -> usize {
        self.categories
    }

    fn domain(&self) -> Domain {
        Domain::Simplex
    }

    fn log_likelihood(&self, data: &Dataset, theta: &[f64]) -> f64 {
        if !self.in_domain(theta) {
            return f64::NEG_INFINITY;
        }
        let v = Self::ll_counts(&self.counts(data), theta);
        if v.is_nan() {
            f64::NEG_INFINITY
        } else {
            v
        }
    }

    fn sample(&self, theta: &[f64], n: usize, rng: &mut SimRng) -> Dataset {
        let last = self.categories - 1;
        Dataset::new(
            (0..n)
                .map(|_| {
                    let u: f64 = rng.random();
                    let mut acc = 0.0;
                    for (k, &p) in theta.iter().enumerate() {
                        acc += p;
                        if u < acc {
                            return k as f64;
                        }
                    }
                    last as f64
                })
                .collect(),
        )
    }

    fn mle(&self, data: &Dataset) -> Result<Vec<f64>> {
        let counts = self.counts(data);
        let n: f64 = counts.iter().sum();
        if n == 0.0 {
            return Err(Error::DegenerateMle("multinomial: empty dataset".into()));
        }
        if counts.contains(&0.0) {
            return Err(Error::DegenerateMle(
                "multinomial: empty cell puts the MLE on the simplex boundary".into(),
            ));
        }
        Ok(counts.iter().map(|c| c / n).collect())
    }

    fn sup_log_likelihood(&self, data: &Dataset) -> Option<f64> {
        let counts = self.counts(data);
        let n: f64 = counts.iter().sum();
        if n == 0.0 {
            return None;
        }
        let theta: Vec<f64> = counts.iter().map(|c| c / n).collect();
        Some(Self::ll_counts(&counts, &theta))
    }

    fn score(&self, data: &Dataset, theta: &[f64]) -> Vec<f64> {
        self.counts(data).iter().zip(theta).map(|(c, t)| c / t).collect()
    }

    /// Diagonal information x_k/θ_k² of the unconstrained cell log-likelihood.
    fn analytic_information(&self, data: &Dataset, theta: &[f64]) -> Option<DMatrix<f64>> {
        let c = self.counts(data);
        Some(DMatrix::from_fn(self.categories, self.categories, |i, j| {
            if i == j {
                c[i] / (theta[i] * theta[i])
            } else {
                0.0
            }
        }))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::relative_likelihood;
    use crate::rng::stream;

    #[test]
    fn mle_is_cell_frequency() {
        let m = Multinomial::new(3);
        let data = Multinomial::dataset(&[8, 10, 7]);
        assert_eq!(m.mle(&data).unwrap(), vec![8.0 / 25.0, 10.0 / 25.0, 7.0 / 25.0]);
        let r = relative_likelihood(&m, &data, &[0.32, 0.4, 0.28]).unwrap();
        assert_eq!(r.value, 1.0);
        let r = relative_likelihood(&m, &data, &[0.5, 0.5, 0.0]).unwrap();
        assert!(r.domain_violation && r.value == 0.0);
    }

    #[test]
    fn sampler_frequencies() {
        let m = Multinomial::new(3);
        let d = m.sample(&[0.2, 0.5, 0.3], 20_000, &mut stream(1, &[]));
        let c = m.counts(&d);
        assert!((c[1] / 20_000.0 - 0.5).abs() < 0.015);
        assert_eq!(c.iter().sum::<f64>(), 20_000.0);
    }

    #[test]
    fn empty_cell_is_degenerate() {
        assert!(Multinomial::new(3).mle(&Multinomial::dataset(&[3, 0, 2])).is_err());
    }
}

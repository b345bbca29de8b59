use serde::{Deserialize, Serialize};

use crate::contour::{GaussianForm, PossibilityContour};
use crate::error::{Error, Result};
use crate::family::{GaussianScalarFamily, VariationalFamily};
use crate::model::Anchor;
use crate::rng::stream;

/// Effort spent on approximate suprema.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SearchBudget {
    /// Candidate points drawn from the proposal family.
    pub candidates: usize,
    /// Pattern-search iterations from the best candidate.
    pub refine_steps: usize,
    pub seed: u64,
}

impl Default for SearchBudget {
    fn default() -> Self {
        Self {
            candidates: 2000,
            refine_steps: 100,
            seed: 0,
        }
    }
}

/// Sampler for candidate points: a user-supplied family, or the Gaussian
/// implied by a closed-form contour.
pub(crate) enum Proposal<'a> {
    Family(&'a dyn VariationalFamily),
    Gaussian(GaussianScalarFamily),
}

impl<'a> Proposal<'a> {
    pub fn new(contour: &dyn PossibilityContour, family: Option<&'a dyn VariationalFamily>) -> Result<Self> {
        if let Some(f) = family {
            return Ok(Proposal::Family(f));
        }
        match contour.gaussian_form() {
            Some(form) => Ok(Proposal::Gaussian(gaussian_sampler(&form)?)),
            None => Err(Error::InvalidInput(
                "a proposal family is required for contours without a closed form".into(),
            )),
        }
    }

    fn sample_one(&self, rng: &mut crate::rng::SimRng) -> Vec<f64> {
        match self {
            Proposal::Family(f) => f.sample_one(rng),
            Proposal::Gaussian(g) => g.sample_one(rng),
        }
    }

    /// `n` draws; every other draw is inflated threefold about `center` (when
    /// one is given).
    pub fn candidates(&self, n: usize, center: &[f64], seed: u64) -> Vec<Vec<f64>> {
        let mut rng = stream(seed, &[0xCA]);
        (0..n)
            .map(|i| {
                let x = self.sample_one(&mut rng);
                if i % 2 == 1 && center.len() == x.len() {
                    x.iter().zip(center).map(|(v, c)| c + 3.0 * (v - c)).collect()
                } else {
                    x
                }
            })
            .collect()
    }
}

pub(crate) fn gaussian_sampler(form: &GaussianForm) -> Result<GaussianScalarFamily> {
    GaussianScalarFamily::new(Anchor::new(form.mean.clone(), form.precision.clone())?, 1.0)
}

/// Center used for inflation and as a fallback start.
pub(crate) fn center_of(contour: &dyn PossibilityContour, pool: &[Vec<f64>]) -> Vec<f64> {
    contour.mode().unwrap_or_else(|| {
        let d = pool.first().map_or(contour.dim(), Vec::len);
        let mut c = vec![0.0; d];
        for p in pool {
            c.iter_mut().zip(p).for_each(|(a, b)| *a += b / pool.len() as f64);
        }
        c
    })
}

/// Per-coordinate half standard deviation of a point cloud, for step sizes.
pub(crate) fn spread(pool: &[Vec<f64>], d: usize) -> Vec<f64> {
    if pool.len() < 2 {
        return vec![0.1; d];
    }
    (0..d)
        .map(|j| {
            let m = pool.iter().map(|p| p[j]).sum::<f64>() / pool.len() as f64;
            let v = pool.iter().map(|p| (p[j] - m).powi(2)).sum::<f64>() / (pool.len() - 1) as f64;
            let s = 0.5 * v.sqrt();
            if s > 0.0 && s.is_finite() {
                s
            } else {
                0.1
            }
        })
        .collect()
}

/// Compass search maximizing `objective` (`None` = infeasible) from a
/// feasible start. Returns the best point, its value and the number of
/// objective calls.
pub(crate) fn pattern_search(
    start: Vec<f64>,
    start_value: f64,
    mut step: Vec<f64>,
    iterations: usize,
    objective: &dyn Fn(&[f64]) -> Option<f64>,
) -> (Vec<f64>, f64, usize) {
    let d = start.len();
    let (mut x, mut fx) = (start, start_value);
    let mut calls = 0;
    for _ in 0..iterations {
        let mut best: Option<(Vec<f64>, f64)> = None;
        for i in 0..d {
            for sign in [1.0, -1.0] {
                let mut y = x.clone();
                y[i] += sign * step[i];
                calls += 1;
                if let Some(v) = objective(&y) {
                    if v > fx && best.as_ref().is_none_or(|b| v > b.1) {
                        best = Some((y, v));
                    }
                }
            }
        }
        match best {
            Some((y, v)) => {
                x = y;
                fx = v;
            }
            None => {
                step.iter_mut().for_each(|s| *s *= 0.5);
                if step.iter().all(|s| *s < 1e-12) {
                    break;
                }
            }
        }
    }
    (x, fx, calls)
}

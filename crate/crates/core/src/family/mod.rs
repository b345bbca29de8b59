//! Variational families Q^ξ: Gaussian with scalar or eigen-vector index,
//! and Dirichlet on the simplex.

mod dirichlet;
mod gaussian;

pub use dirichlet::{DirichletContour, DirichletFamily};
pub use gaussian::{credible_ellipsoid_membership, sorted_eigen, GaussianScalarFamily, GaussianVectorFamily};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::SimRng;

/// A distribution that can be sampled.
pub trait VariationalFamily: Send + Sync {
    fn dim(&self) -> usize;
    fn sample_one(&self, rng: &mut SimRng) -> Vec<f64>;

    fn sample(&self, k: usize, rng: &mut SimRng) -> Vec<Vec<f64>> {
        (0..k).map(|_| self.sample_one(rng)).collect()
    }
}

/// Families indexed by a single positive ξ.
pub trait ScalarIndexed: VariationalFamily + Clone {
    fn xi(&self) -> f64;
    fn with_xi(&self, xi: f64) -> Result<Self>;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FamilyKind {
    GaussianScalar,
    GaussianVector,
    Dirichlet,
}

/// Serializable description of a fitted family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FamilyRecord {
    pub kind: FamilyKind,
    pub mean: Vec<f64>,
    /// d×d information, row-major. For Dirichlet this holds the single entry n.
    pub information: Vec<f64>,
    pub xi: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub eigenvalues: Option<Vec<f64>>,
    /// Eigenvectors as rows.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub eigenvectors: Option<Vec<Vec<f64>>>,
    pub alpha: f64,
    pub seed: u64,
    pub iterations: usize,
}

pub(crate) fn check_xi(xi: f64) -> Result<()> {
    if xi > 0.0 && xi.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!(
            "family index ξ must be positive, got {xi}"
        )))
    }
}

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand_distr::{Distribution, StandardNormal};

use super::{check_xi, FamilyKind, FamilyRecord, ScalarIndexed, VariationalFamily};
use crate::contour::{ContourKind, Evaluation, GaussianForm, PossibilityContour};
use crate::error::{Error, Result};
use crate::model::Anchor;
use crate::rng::SimRng;
use crate::special::{chi2_quantile, chi2_sf};

fn standard_normal(d: usize, rng: &mut SimRng) -> DVector<f64> {
    DVector::from_iterator(d, (0..d).map(|_| StandardNormal.sample(rng)))
}

fn delta(anchor: &Anchor, theta: &[f64]) -> DVector<f64> {
    DVector::from_iterator(anchor.dim(), theta.iter().zip(&anchor.mean).map(|(t, m)| t - m))
}

/// Eigen-decomposition J = U Ψ Uᵀ with eigenvalues descending and the first
/// nonzero component of every eigenvector positive. A diagonal J yields
/// coordinate unit vectors, ties keeping coordinate order.
pub fn sorted_eigen(j: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let d = j.nrows();
    let diagonal = (0..d).all(|r| (0..d).all(|c| r == c || j[(r, c)] == 0.0));
    let (values, vectors) = if diagonal {
        (j.diagonal().as_slice().to_vec(), DMatrix::identity(d, d))
    } else {
        let e = SymmetricEigen::new(j.clone());
        (e.eigenvalues.as_slice().to_vec(), e.eigenvectors)
    };
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| values[b].total_cmp(&values[a]));
    let mut u = DMatrix::zeros(d, d);
    for (k, &src) in order.iter().enumerate() {
        let mut col = vectors.column(src).into_owned();
        if let Some(first) = col.iter().find(|v| v.abs() > 1e-12) {
            if *first < 0.0 {
                col = -col;
            }
        }
        u.set_column(k, &col);
    }
    (order.iter().map(|&i| values[i]).collect(), u)
}

/// N(θ̂, ξ² J⁻¹).
#[derive(Debug, Clone)]
pub struct GaussianScalarFamily {
    pub anchor: Anchor,
    pub xi: f64,
    chol: DMatrix<f64>,
}

impl GaussianScalarFamily {
    pub fn new(anchor: Anchor, xi: f64) -> Result<Self> {
        check_xi(xi)?;
        let chol = anchor
            .information
            .clone()
            .cholesky()
            .ok_or_else(|| Error::SingularInformation("information is not positive definite".into()))?
            .l();
        Ok(Self { anchor, xi, chol })
    }

    pub fn dim(&self) -> usize {
        self.anchor.dim()
    }

    /// (θ−θ̂)ᵀ J (θ−θ̂).
    pub fn quadratic(&self, theta: &[f64]) -> f64 {
        (self.chol.transpose() * delta(&self.anchor, theta)).norm_squared()
    }

    /// 1 − G_d{(θ−θ̂)ᵀJ(θ−θ̂)/ξ²}.
    pub fn contour(&self, theta: &[f64]) -> f64 {
        chi2_sf(self.anchor.dim(), self.quadratic(theta) / (self.xi * self.xi))
    }

    /// ξ² J⁻¹.
    pub fn covariance(&self) -> DMatrix<f64> {
        let l_inv = self
            .chol
            .clone()
            .try_inverse()
            .expect("triangular factor is invertible");
        l_inv.transpose() * l_inv * (self.xi * self.xi)
    }

    pub fn record(&self, alpha: f64, seed: u64, iterations: usize) -> FamilyRecord {
        FamilyRecord {
            kind: FamilyKind::GaussianScalar,
            mean: self.anchor.mean.clone(),
            information: self.anchor.information.transpose().as_slice().to_vec(),
            xi: vec![self.xi],
            eigenvalues: None,
            eigenvectors: None,
            alpha,
            seed,
            iterations,
        }
    }
}

impl VariationalFamily for GaussianScalarFamily {
    fn dim(&self) -> usize {
        self.anchor.dim()
    }

    fn sample_one(&self, rng: &mut SimRng) -> Vec<f64> {
        let z = standard_normal(self.dim(), rng);
        let x = self
            .chol
            .transpose()
            .solve_upper_triangular(&z)
            .expect("triangular factor is invertible");
        x.iter().zip(&self.anchor.mean).map(|(v, m)| m + self.xi * v).collect()
    }
}

impl ScalarIndexed for GaussianScalarFamily {
    fn xi(&self) -> f64 {
        self.xi
    }

    fn with_xi(&self, xi: f64) -> Result<Self> {
        check_xi(xi)?;
        Ok(Self { xi, ..self.clone() })
    }
}

impl PossibilityContour for GaussianScalarFamily {
    fn dim(&self) -> usize {
        self.anchor.dim()
    }

    fn kind(&self) -> ContourKind {
        ContourKind::ClosedFormGaussian
    }

    fn evaluate(&self, theta: &[f64], _seed: u64) -> Evaluation {
        if theta.len() != self.anchor.dim() || !theta.iter().all(|v| v.is_finite()) {
            return Evaluation::domain_violation();
        }
        Evaluation::ok(self.contour(theta))
    }

    fn mode(&self) -> Option<Vec<f64>> {
        Some(self.anchor.mean.clone())
    }

    fn gaussian_form(&self) -> Option<GaussianForm> {
        Some(GaussianForm {
            mean: self.anchor.mean.clone(),
            precision: &self.anchor.information / (self.xi * self.xi),
        })
    }
}

/// N(θ̂, J(ξ)⁻¹) with J(ξ) = U diag(ξ⁻¹) Ψ diag(ξ⁻¹) Uᵀ.
#[derive(Debug, Clone)]
pub struct GaussianVectorFamily {
    pub anchor: Anchor,
    pub xi: Vec<f64>,
    pub eigenvalues: Vec<f64>,
    /// Eigenvectors as columns.
    pub eigenvectors: DMatrix<f64>,
}

impl GaussianVectorFamily {
    pub fn new(anchor: Anchor, xi: Vec<f64>) -> Result<Self> {
        if xi.len() != anchor.dim() {
            return Err(Error::InvalidInput(format!(
                "ξ has length {}, expected {}",
                xi.len(),
                anchor.dim()
            )));
        }
        let (eigenvalues, eigenvectors) = sorted_eigen(&anchor.information);
        if let Some(bad) = eigenvalues.iter().find(|&&v| !(v > 0.0)) {
            return Err(Error::SingularInformation(format!("nonpositive eigenvalue {bad:e}")));
        }
        Ok(Self {
            anchor,
            xi,
            eigenvalues,
            eigenvectors,
        })
    }

    /// Same anchor and eigen-decomposition, new index.
    pub fn with_xi(&self, xi: Vec<f64>) -> Result<Self> {
        if xi.len() != self.anchor.dim() {
            return Err(Error::InvalidInput("ξ has the wrong length".into()));
        }
        Ok(Self { xi, ..self.clone() })
    }

    pub fn dim(&self) -> usize {
        self.anchor.dim()
    }

    fn check_xi(&self) -> Result<()> {
        self.xi.iter().try_for_each(|&x| check_xi(x))
    }

    /// (θ−θ̂)ᵀ J(ξ) (θ−θ̂).
    pub fn quadratic(&self, theta: &[f64]) -> f64 {
        let proj = self.eigenvectors.transpose() * delta(&self.anchor, theta);
        proj.iter()
            .zip(&self.eigenvalues)
            .zip(&self.xi)
            .map(|((p, psi), xi)| psi * p * p / (xi * xi))
            .sum()
    }

    pub fn contour(&self, theta: &[f64]) -> f64 {
        chi2_sf(self.anchor.dim(), self.quadratic(theta))
    }

    /// J(ξ).
    pub fn precision(&self) -> DMatrix<f64> {
        let scaled = DVector::from_iterator(
            self.xi.len(),
            self.eigenvalues.iter().zip(&self.xi).map(|(psi, xi)| psi / (xi * xi)),
        );
        &self.eigenvectors * DMatrix::from_diagonal(&scaled) * self.eigenvectors.transpose()
    }

    /// For s = 1..d the pair ϑ_s^± = θ̂ ± ξ_s {χ²_d(1−α)/ψ_s}^{1/2} u_s, which
    /// lie on the boundary of the 100(1−α)% credible ellipsoid.
    pub fn boundary_points(&self, alpha: f64) -> Result<Vec<(Vec<f64>, Vec<f64>)>> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::InvalidInput(format!("α must lie in (0,1), got {alpha}")));
        }
        let q = chi2_quantile(self.anchor.dim(), 1.0 - alpha);
        Ok((0..self.anchor.dim())
            .map(|s| {
                let offset = self.xi[s] * (q / self.eigenvalues[s]).sqrt();
                let u = self.eigenvectors.column(s);
                let plus = self
                    .anchor
                    .mean
                    .iter()
                    .zip(u.iter())
                    .map(|(m, v)| m + offset * v)
                    .collect();
                let minus = self
                    .anchor
                    .mean
                    .iter()
                    .zip(u.iter())
                    .map(|(m, v)| m - offset * v)
                    .collect();
                (plus, minus)
            })
            .collect())
    }

    pub fn record(&self, alpha: f64, seed: u64, iterations: usize) -> FamilyRecord {
        FamilyRecord {
            kind: FamilyKind::GaussianVector,
            mean: self.anchor.mean.clone(),
            information: self.anchor.information.transpose().as_slice().to_vec(),
            xi: self.xi.clone(),
            eigenvalues: Some(self.eigenvalues.clone()),
            eigenvectors: Some(self.eigenvectors.column_iter().map(|c| c.as_slice().to_vec()).collect()),
            alpha,
            seed,
            iterations,
        }
    }
}

impl VariationalFamily for GaussianVectorFamily {
    fn dim(&self) -> usize {
        self.anchor.dim()
    }

    fn sample_one(&self, rng: &mut SimRng) -> Vec<f64> {
        self.check_xi().expect("sampling requires positive ξ");
        let z = standard_normal(self.dim(), rng);
        let scaled = DVector::from_iterator(
            self.dim(),
            z.iter()
                .zip(&self.eigenvalues)
                .zip(&self.xi)
                .map(|((z, psi), xi)| z * xi / psi.sqrt()),
        );
        let x = &self.eigenvectors * scaled;
        x.iter().zip(&self.anchor.mean).map(|(v, m)| m + v).collect()
    }
}

impl PossibilityContour for GaussianVectorFamily {
    fn dim(&self) -> usize {
        self.anchor.dim()
    }

    fn kind(&self) -> ContourKind {
        ContourKind::ClosedFormGaussian
    }

    fn evaluate(&self, theta: &[f64], _seed: u64) -> Evaluation {
        if theta.len() != self.anchor.dim() || !theta.iter().all(|v| v.is_finite()) || self.check_xi().is_err() {
            return Evaluation::domain_violation();
        }
        Evaluation::ok(self.contour(theta))
    }

    fn mode(&self) -> Option<Vec<f64>> {
        Some(self.anchor.mean.clone())
    }

    fn gaussian_form(&self) -> Option<GaussianForm> {
        Some(GaussianForm {
            mean: self.anchor.mean.clone(),
            precision: self.precision(),
        })
    }
}

/// Whether θ lies in {θ : (θ−θ̂)ᵀ J(ξ) (θ−θ̂) ≤ χ²_d(1−α)}.
pub fn credible_ellipsoid_membership(family: &GaussianVectorFamily, alpha: f64, theta: &[f64]) -> bool {
    family.quadratic(theta) <= chi2_quantile(family.anchor.dim(), 1.0 - alpha)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;
    use proptest::prelude::*;
    use rand::Rng;

    fn anchor(mean: Vec<f64>, j: DMatrix<f64>) -> Anchor {
        Anchor::new(mean, j).unwrap()
    }

    fn random_spd(d: usize, seed: u64) -> DMatrix<f64> {
        let mut rng = stream(seed, &[]);
        let a: DMatrix<f64> = DMatrix::from_fn(d, d, |_, _| StandardNormal.sample(&mut rng));
        &a * a.transpose() + DMatrix::identity(d, d) * 0.5
    }

    #[test]
    fn contour_values() {
        let f = GaussianScalarFamily::new(anchor(vec![0.0], DMatrix::identity(1, 1)), 1.0).unwrap();
        assert_eq!(f.contour(&[0.0]), 1.0);
        assert!((f.contour(&[1.6449]) - 0.1).abs() < 1e-4);
        let f2 = GaussianScalarFamily::new(anchor(vec![0.0, 0.0], DMatrix::identity(2, 2)), 1.0).unwrap();
        let r = 4.6052f64.sqrt();
        assert!((f2.contour(&[r * 0.6, r * 0.8]) - 0.1).abs() < 1e-5);
    }

    #[test]
    fn sample_moments_and_degenerate_limit() {
        let f = GaussianScalarFamily::new(anchor(vec![0.0], DMatrix::identity(1, 1)), 1.0).unwrap();
        let xs: Vec<f64> = f
            .sample(100_000, &mut stream(1, &[]))
            .into_iter()
            .map(|v| v[0])
            .collect();
        let mean = xs.iter().sum::<f64>() / xs.len() as f64;
        let sd = (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / xs.len() as f64).sqrt();
        assert!(mean.abs() < 0.02 && (0.99..=1.01).contains(&sd), "{mean} {sd}");
        let tight = f.with_xi(1e-8).unwrap();
        assert!(tight.sample(100, &mut stream(2, &[])).iter().all(|v| v[0].abs() < 1e-6));
    }

    #[test]
    fn eigen_reconstruction_and_convention() {
        let j = random_spd(4, 3);
        let (psi, u) = sorted_eigen(&j);
        assert!(psi.windows(2).all(|w| w[0] >= w[1]));
        let rec = &u * DMatrix::from_diagonal(&DVector::from_vec(psi.clone())) * u.transpose();
        assert!((&rec - &j).amax() <= 1e-10 * j.amax());
        for c in u.column_iter() {
            assert!(c.iter().find(|v| v.abs() > 1e-12).unwrap() > &0.0);
        }
        let (psi, u) = sorted_eigen(&DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 4.0, 1.0])));
        assert_eq!(psi, vec![4.0, 1.0, 1.0]);
        assert_eq!(u.column(0).as_slice(), &[0.0, 1.0, 0.0]);
        assert_eq!(u.column(1).as_slice(), &[1.0, 0.0, 0.0]);
    }

    #[test]
    fn ellipsoid_membership_boundary() {
        let f = GaussianVectorFamily::new(anchor(vec![0.0], DMatrix::identity(1, 1)), vec![1.0]).unwrap();
        assert!(credible_ellipsoid_membership(&f, 0.1, &[0.0]));
        assert!(credible_ellipsoid_membership(&f, 0.1, &[1.6448]));
        assert!(!credible_ellipsoid_membership(&f, 0.1, &[1.6450]));
    }

    #[test]
    fn boundary_points_on_ellipsoid() {
        let j = DMatrix::from_diagonal(&DVector::from_vec(vec![4.0, 1.0]));
        let f = GaussianVectorFamily::new(anchor(vec![1.0, -1.0], j), vec![1.0, 1.0]).unwrap();
        let q = chi2_quantile(2, 0.9);
        let pts = f.boundary_points(0.1).unwrap();
        assert!((pts[0].0[0] - 1.0 - (q / 4.0).sqrt()).abs() < 1e-12);
        assert!((pts[1].1[1] + 1.0 + q.sqrt()).abs() < 1e-12);
        let g = GaussianVectorFamily::new(anchor(vec![0.5, 0.2, -0.3], random_spd(3, 8)), vec![0.7, 1.3, 2.1]).unwrap();
        let q3 = chi2_quantile(3, 0.9);
        for (p, m) in g.boundary_points(0.1).unwrap() {
            assert!((g.quadratic(&p) / q3 - 1.0).abs() < 1e-10);
            assert!((g.quadratic(&m) / q3 - 1.0).abs() < 1e-10);
        }
        let one = GaussianVectorFamily::new(anchor(vec![0.0], DMatrix::identity(1, 1)), vec![1.0]).unwrap();
        assert!((one.boundary_points(0.1).unwrap()[0].0[0] - 1.6449).abs() < 1e-4);
    }

    #[test]
    fn vector_sampling_covariance() {
        let j = random_spd(2, 5);
        let f = GaussianVectorFamily::new(anchor(vec![0.0, 0.0], j), vec![0.5, 2.0]).unwrap();
        let cov = f.precision().try_inverse().unwrap();
        let xs = f.sample(200_000, &mut stream(6, &[]));
        for (a, b) in [(0, 0), (0, 1), (1, 1)] {
            let emp = xs.iter().map(|x| x[a] * x[b]).sum::<f64>() / xs.len() as f64;
            assert!(
                (emp - cov[(a, b)]).abs() < 0.02 * (cov[(a, a)] * cov[(b, b)]).sqrt(),
                "{emp} {}",
                cov[(a, b)]
            );
        }
    }

    proptest! {
        #[test]
        fn constant_vector_index_matches_scalar(seed in 0u64..1000, c in 0.2f64..3.0) {
            let d = 3;
            let a = anchor(vec![0.1, -0.2, 0.3], random_spd(d, seed));
            let s = GaussianScalarFamily::new(a.clone(), c).unwrap();
            let v = GaussianVectorFamily::new(a.clone(), vec![c; d]).unwrap();
            let p = &a.information / (c * c);
            prop_assert!((v.precision() - &p).amax() <= 1e-10 * p.amax());
            let mut rng = stream(seed, &[1]);
            for _ in 0..100 {
                let t: Vec<f64> = (0..d).map(|i| a.mean[i] + 0.5 * rng.sample::<f64, _>(StandardNormal)).collect();
                let (x, y) = (s.contour(&t), v.contour(&t));
                prop_assert!((x - y).abs() <= 1e-10 * x.max(1e-300), "{} vs {}", x, y);
                prop_assert_eq!(credible_ellipsoid_membership(&v, 0.1, &t), x > 0.1);
            }
        }
    }
}

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use super::search::{center_of, pattern_search, spread, Proposal, SearchBudget};
use crate::contour::{AxisSpec, ContourGrid, EvalStatus, PossibilityContour};
use crate::error::{Error, Result};
use crate::family::VariationalFamily;
use crate::rng::derive_seed;
use crate::special::chi2_sf;

/// Feature φ = g(θ).
#[derive(Clone)]
pub enum FeatureMap {
    /// φ = Gθ for a k×d matrix G of full row rank.
    Linear(DMatrix<f64>),
    Nonlinear {
        out_dim: usize,
        map: Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>,
    },
}

impl std::fmt::Debug for FeatureMap {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            FeatureMap::Linear(g) => f.debug_tuple("Linear").field(g).finish(),
            FeatureMap::Nonlinear { out_dim, .. } => f
                .debug_struct("Nonlinear")
                .field("out_dim", out_dim)
                .finish_non_exhaustive(),
        }
    }
}

impl FeatureMap {
    /// φ = θ_i.
    pub fn coordinate(d: usize, i: usize) -> Self {
        FeatureMap::Linear(DMatrix::from_fn(1, d, |_, j| if j == i { 1.0 } else { 0.0 }))
    }

    pub fn nonlinear(out_dim: usize, map: impl Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static) -> Self {
        FeatureMap::Nonlinear {
            out_dim,
            map: Arc::new(map),
        }
    }

    pub fn out_dim(&self) -> usize {
        match self {
            FeatureMap::Linear(g) => g.nrows(),
            FeatureMap::Nonlinear { out_dim, .. } => *out_dim,
        }
    }

    pub fn apply(&self, theta: &[f64]) -> Vec<f64> {
        match self {
            FeatureMap::Linear(g) => (g * DVector::from_column_slice(theta)).as_slice().to_vec(),
            FeatureMap::Nonlinear { map, .. } => map(theta),
        }
    }
}

const FIBER_TOL: f64 = 1e-8;

/// Moves θ onto the fiber {g = φ}: exactly for linear g, by Gauss–Newton
/// with a finite-difference Jacobian otherwise.
struct Fiber<'a> {
    g: &'a FeatureMap,
    pinv: Option<DMatrix<f64>>,
}

impl<'a> Fiber<'a> {
    fn new(g: &'a FeatureMap) -> Result<Self> {
        let pinv = match g {
            FeatureMap::Linear(m) => {
                let ggt = m * m.transpose();
                let inv = ggt
                    .try_inverse()
                    .ok_or_else(|| Error::InvalidInput("linear feature map must have full row rank".into()))?;
                Some(m.transpose() * inv)
            }
            FeatureMap::Nonlinear { .. } => None,
        };
        Ok(Self { g, pinv })
    }

    fn project(&self, theta: &[f64], phi: &[f64]) -> Option<Vec<f64>> {
        let residual = |x: &[f64]| -> DVector<f64> {
            DVector::from_iterator(phi.len(), self.g.apply(x).iter().zip(phi).map(|(a, b)| a - b))
        };
        if let Some(pinv) = &self.pinv {
            let x = DVector::from_column_slice(theta) - pinv * residual(theta);
            return Some(x.as_slice().to_vec());
        }
        let mut x = theta.to_vec();
        for _ in 0..50 {
            let r = residual(&x);
            if !r.iter().all(|v| v.is_finite()) {
                return None;
            }
            if r.amax() <= FIBER_TOL {
                return Some(x);
            }
            let jac = DMatrix::from_fn(phi.len(), x.len(), |i, j| {
                let h = 1e-6 * (1.0 + x[j].abs());
                let mut a = x.clone();
                let mut b = x.clone();
                a[j] += h;
                b[j] -= h;
                (self.g.apply(&a)[i] - self.g.apply(&b)[i]) / (2.0 * h)
            });
            let jjt = &jac * jac.transpose();
            let step = jac.transpose() * jjt.try_inverse()? * r;
            x.iter_mut().zip(step.iter()).for_each(|(xi, s)| *xi -= s);
        }
        (residual(&x).amax() <= FIBER_TOL).then_some(x)
    }
}

/// π^marg(φ) = sup_{θ: g(θ)=φ} π(θ) on a grid of φ values.
///
/// For a closed-form Gaussian contour and linear g = G the exact projected
/// form 1 − G_k{(φ−Gθ̂)ᵀ(GA⁻¹Gᵀ)⁻¹(φ−Gθ̂)} is used (k = rows of G). Otherwise
/// each node maximizes π over the fiber starting from the projected mode and
/// projected proposal candidates; infeasible nodes get value 0 and a
/// domain-violation flag.
pub fn marginal_contour(
    contour: &dyn PossibilityContour,
    g: &FeatureMap,
    phi_axes: &[AxisSpec],
    budget: &SearchBudget,
    proposal: Option<&dyn VariationalFamily>,
) -> Result<ContourGrid> {
    let k = g.out_dim();
    if phi_axes.len() != k {
        return Err(Error::InvalidInput(format!(
            "{} φ axes for a {k}-dimensional feature",
            phi_axes.len()
        )));
    }
    if let FeatureMap::Linear(m) = g {
        if m.ncols() != contour.dim() {
            return Err(Error::InvalidInput(
                "feature matrix has the wrong number of columns".into(),
            ));
        }
    }
    let mut grid = ContourGrid {
        axes: phi_axes.to_vec(),
        values: Vec::new(),
        status: Vec::new(),
    };
    let total: usize = phi_axes.iter().map(|a| a.count).product();
    let nodes: Vec<Vec<f64>> = (0..total).map(|i| grid.node(i)).collect();

    let results: Vec<(f64, EvalStatus)> = match (g, contour.gaussian_form()) {
        (FeatureMap::Linear(gm), Some(form)) => {
            let chol = form
                .precision
                .clone()
                .cholesky()
                .ok_or_else(|| Error::SingularInformation("precision is not positive definite".into()))?;
            let cov = gm * chol.solve(&gm.transpose());
            let s = cov
                .cholesky()
                .ok_or_else(|| Error::SingularInformation("projected covariance is singular".into()))?;
            let center = gm * DVector::from_column_slice(&form.mean);
            nodes
                .iter()
                .map(|phi| {
                    let delta = DVector::from_column_slice(phi) - &center;
                    let q = delta.dot(&s.solve(&delta));
                    (chi2_sf(k, q), EvalStatus::Ok)
                })
                .collect()
        }
        _ => {
            let fiber = Fiber::new(g)?;
            let proposal = Proposal::new(contour, proposal)?;
            let center = contour
                .mode()
                .unwrap_or_else(|| center_of(contour, &proposal.candidates(64, &[], budget.seed)));
            let pool = proposal.candidates(budget.candidates.min(400), &center, budget.seed);
            let step = spread(&pool, contour.dim());
            nodes
                .par_iter()
                .enumerate()
                .map(|(i, phi)| {
                    let seed = derive_seed(budget.seed, &[i as u64]);
                    let eval = |x: &[f64]| fiber.project(x, phi).map(|p| contour.evaluate(&p, seed).value);
                    let mut best: Option<(Vec<f64>, f64)> = None;
                    for p in std::iter::once(&center).chain(pool.iter()) {
                        if let Some(v) = eval(p) {
                            if best.as_ref().is_none_or(|b| v > b.1) {
                                best = Some((p.clone(), v));
                            }
                        }
                    }
                    match best {
                        None => (0.0, EvalStatus::DomainViolation),
                        Some((x, v)) => {
                            let (_, v, _) = pattern_search(x, v, step.clone(), budget.refine_steps, &eval);
                            (v, EvalStatus::Ok)
                        }
                    }
                })
                .collect()
        }
    };
    grid.values = results.iter().map(|r| r.0).collect();
    grid.status = results.iter().map(|r| r.1).collect();
    Ok(grid)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::contour::{grid_eval, ContourKind, Evaluation};
    use crate::family::GaussianScalarFamily;
    use crate::model::Anchor;

    fn family() -> GaussianScalarFamily {
        let j = DMatrix::from_row_slice(2, 2, &[2.0, 0.6, 0.6, 1.0]);
        GaussianScalarFamily::new(Anchor::new(vec![1.0, -0.5], j).unwrap(), 1.2).unwrap()
    }

    struct Opaque(GaussianScalarFamily);

    impl PossibilityContour for Opaque {
        fn dim(&self) -> usize {
            2
        }
        fn kind(&self) -> ContourKind {
            ContourKind::MonteCarlo
        }
        fn evaluate(&self, theta: &[f64], seed: u64) -> Evaluation {
            self.0.evaluate(theta, seed)
        }
        fn mode(&self) -> Option<Vec<f64>> {
            self.0.mode()
        }
    }

    #[test]
    fn identity_reproduces_contour() {
        let f = family();
        let axes = [AxisSpec::new(0.0, 2.0, 7), AxisSpec::new(-1.5, 0.5, 6)];
        let m = marginal_contour(
            &f,
            &FeatureMap::Linear(DMatrix::identity(2, 2)),
            &axes,
            &SearchBudget::default(),
            None,
        )
        .unwrap();
        let direct = grid_eval(&f, &axes, 0, None).unwrap();
        for (a, b) in m.values.iter().zip(&direct.values) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn coordinate_projection_uses_marginal_variance() {
        let f = family();
        let var = f.covariance()[(1, 1)];
        let axes = [AxisSpec::new(-2.5, 1.5, 41)];
        let m = marginal_contour(&f, &FeatureMap::coordinate(2, 1), &axes, &SearchBudget::default(), None).unwrap();
        for i in 0..m.len() {
            let phi = m.node(i)[0];
            let expect = chi2_sf(1, (phi + 0.5).powi(2) / var);
            assert!((m.values[i] - expect).abs() < 1e-12);
        }
        assert_eq!(m.values[20], 1.0);
    }

    #[test]
    fn generic_fiber_search_matches_sup_over_fiber() {
        // sup over the line θ2 = φ of the 2-d contour is 1 − G_2(z²) where
        // z² = (φ − θ̂2)²/Σ22 is the minimum of the quadratic along the fiber
        let f = family();
        let var = f.covariance()[(1, 1)];
        let axes = [AxisSpec::new(-2.0, 1.0, 9)];
        let m = marginal_contour(
            &Opaque(f.clone()),
            &FeatureMap::coordinate(2, 1),
            &axes,
            &SearchBudget::default(),
            Some(&f),
        )
        .unwrap();
        for i in 0..m.len() {
            let phi = m.node(i)[0];
            let expect = chi2_sf(2, (phi + 0.5).powi(2) / var);
            assert!((m.values[i] - expect).abs() < 1e-4, "{} vs {expect}", m.values[i]);
        }
        // nonlinear map with the same fibers
        let g = FeatureMap::nonlinear(1, |t| vec![t[1].exp()]);
        let axes3 = [AxisSpec::new(0.3, 2.0, 5)];
        let m3 = marginal_contour(&Opaque(f.clone()), &g, &axes3, &SearchBudget::default(), Some(&f)).unwrap();
        for i in 0..m3.len() {
            let phi = m3.node(i)[0];
            let expect = chi2_sf(2, (phi.ln() + 0.5).powi(2) / var);
            assert!((m3.values[i] - expect).abs() < 1e-4, "{} vs {expect}", m3.values[i]);
        }
    }

    #[test]
    fn infeasible_fiber_flagged() {
        let f = family();
        let g = FeatureMap::nonlinear(1, |t| vec![t[0] * t[0]]);
        let m = marginal_contour(
            &Opaque(f.clone()),
            &g,
            &[AxisSpec::new(-1.0, -1.0, 1)],
            &SearchBudget::default(),
            Some(&f),
        )
        .unwrap();
        assert_eq!(m.status[0], EvalStatus::DomainViolation);
        assert_eq!(m.values[0], 0.0);
    }
}

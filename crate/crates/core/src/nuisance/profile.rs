use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::contour::{ContourKind, Evaluation, PossibilityContour, TIE_TOLERANCE};
use crate::error::{Error, Result};
use crate::family::GaussianScalarFamily;
use crate::model::{fd_information, Anchor, Dataset, Gamma, Model};
use crate::rng::stream;

pub type Interest = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;
/// θ on the fiber {g = φ} at nuisance coordinate λ.
pub type FiberChart = Arc<dyn Fn(f64, f64) -> Vec<f64> + Send + Sync>;
/// λ̂(φ): maximizer of the likelihood over the fiber.
pub type FiberMaximizer = Arc<dyn Fn(&Dataset, f64) -> Result<f64> + Send + Sync>;

/// A scalar interest parameter φ = g(θ) with a scalar nuisance coordinate
/// along each fiber.
#[derive(Clone)]
pub struct ProfileSpec {
    pub interest: Interest,
    pub chart: FiberChart,
    pub maximizer: FiberMaximizer,
    /// Points on the fiber where the inner probability is evaluated: the
    /// constrained MLE plus `probes − 1` offsets of up to one profile sd.
    pub probes: usize,
}

impl std::fmt::Debug for ProfileSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ProfileSpec")
            .field("probes", &self.probes)
            .finish_non_exhaustive()
    }
}

impl ProfileSpec {
    /// Mean φ = k·s of a gamma model (any parametrization), nuisance = shape.
    /// For fixed φ the shape solves ln k − ψ(k) = ln φ + x̄/φ − 1 − mean(ln x).
    pub fn gamma_mean(model: Gamma) -> Self {
        let interest = move |t: &[f64]| {
            let (k, s) = model.shape_scale(t);
            k * s
        };
        let chart = move |phi: f64, k: f64| model.from_shape_scale(k, phi / k);
        let maximizer = |data: &Dataset, phi: f64| {
            let xs = &data.responses;
            if !(phi > 0.0) || xs.is_empty() || xs.iter().any(|&x| !(x > 0.0)) {
                return Err(Error::ConstrainedOptimizer(format!(
                    "gamma mean fiber at φ = {phi} is empty"
                )));
            }
            let n = xs.len() as f64;
            let mean = xs.iter().sum::<f64>() / n;
            let mean_log = xs.iter().map(|x| x.ln()).sum::<f64>() / n;
            let c = phi.ln() + mean / phi - 1.0 - mean_log;
            if !(c > 1e-12) {
                return Err(Error::ConstrainedOptimizer(format!(
                    "gamma mean fiber at φ = {phi}: c = {c}"
                )));
            }
            Ok(Gamma::shape_for(c))
        };
        Self {
            interest: Arc::new(interest),
            chart: Arc::new(chart),
            maximizer: Arc::new(maximizer),
            probes: 5,
        }
    }

    pub fn with_probes(mut self, probes: usize) -> Self {
        self.probes = probes;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.probes == 0 {
            return Err(Error::InvalidInput("profile probe count must be at least 1".into()));
        }
        Ok(())
    }

    /// Probe offsets in profile sds: 0, then ±1/h, ±2/h, … up to ±1.
    fn offsets(&self) -> Vec<f64> {
        let extra = self.probes - 1;
        let half = extra.div_ceil(2).max(1) as f64;
        let mut out = vec![0.0];
        for i in 0..extra {
            let step = (i / 2 + 1) as f64 / half;
            out.push(if i % 2 == 0 { -step } else { step });
        }
        out
    }
}

/// log R^pr(x, φ) and the constrained maximizer θ̂_φ.
fn log_profile(model: &dyn Model, data: &Dataset, spec: &ProfileSpec, phi: f64, sup: f64) -> Result<(f64, Vec<f64>)> {
    let lambda = (spec.maximizer)(data, phi)?;
    let theta = (spec.chart)(phi, lambda);
    let ll = model.log_likelihood(data, &theta);
    if !ll.is_finite() {
        return Err(Error::ConstrainedOptimizer(format!(
            "fiber maximizer at φ = {phi} returned λ = {lambda}, θ = {theta:?} with log-likelihood {ll}"
        )));
    }
    Ok(((ll - sup).min(0.0), theta))
}

fn sup_or_err(model: &dyn Model, data: &Dataset) -> Result<f64> {
    model
        .sup_log_likelihood(data)
        .filter(|v| v.is_finite())
        .ok_or_else(|| Error::NonConvergence(format!("{}: likelihood maximization failed", model.name())))
}

/// sup_{g(θ)=φ} L(θ) / sup_θ L(θ).
pub fn relative_profile_likelihood(model: &dyn Model, data: &Dataset, spec: &ProfileSpec, phi: f64) -> Result<f64> {
    let sup = sup_or_err(model, data)?;
    Ok(log_profile(model, data, spec, phi, sup)?.0.exp())
}

/// Validified relative profile likelihood:
/// φ ↦ max over fiber probes θ_p of P_{θ_p}{R^pr(X, φ) ≤ R^pr(x, φ)}.
pub struct ProfileContour<M> {
    pub model: M,
    pub data: Dataset,
    pub spec: ProfileSpec,
    pub m: usize,
    theta_hat: Vec<f64>,
    phi_hat: f64,
    sup: f64,
}

/// Inner probabilities at each probe, for diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbeReport {
    pub phi: f64,
    pub probes: Vec<(Vec<f64>, f64)>,
}

impl ProbeReport {
    pub fn value(&self) -> f64 {
        self.probes.iter().map(|p| p.1).fold(0.0, f64::max)
    }

    /// max − min over probes.
    pub fn spread(&self) -> f64 {
        let min = self.probes.iter().map(|p| p.1).fold(f64::INFINITY, f64::min);
        if self.probes.is_empty() {
            0.0
        } else {
            self.value() - min
        }
    }
}

impl<M: Model> ProfileContour<M> {
    pub fn new(model: M, data: Dataset, spec: ProfileSpec, m: usize) -> Result<Self> {
        spec.validate()?;
        if m == 0 {
            return Err(Error::InvalidInput("Monte Carlo size must be positive".into()));
        }
        let theta_hat = model.mle(&data)?;
        let sup = model.log_likelihood(&data, &theta_hat);
        let phi_hat = (spec.interest)(&theta_hat);
        Ok(Self {
            model,
            data,
            spec,
            m,
            theta_hat,
            phi_hat,
            sup,
        })
    }

    pub fn theta_hat(&self) -> &[f64] {
        &self.theta_hat
    }

    pub fn phi_hat(&self) -> f64 {
        self.phi_hat
    }

    /// Evaluates every probe; replicate i uses `stream(seed, [i])` at all
    /// probes.
    pub fn probe_report(&self, phi: f64, seed: u64) -> Result<ProbeReport> {
        let (obs, theta) = log_profile(&self.model, &self.data, &self.spec, phi, self.sup)?;
        let lambda = (self.spec.maximizer)(&self.data, phi)?;
        let sd = self.profile_sd(phi, lambda);
        let mut probes = Vec::with_capacity(self.spec.probes);
        for off in self.spec.offsets() {
            let point = if off == 0.0 {
                theta.clone()
            } else if let Some(sd) = sd {
                (self.spec.chart)(phi, lambda + off * sd)
            } else {
                continue;
            };
            if !self.model.in_domain(&point) {
                continue;
            }
            let hits = (0..self.m)
                .filter(|&i| {
                    let mut rng = stream(seed, &[i as u64]);
                    let x = self.model.sample(&point, self.data.n(), &mut rng);
                    match sup_or_err(&self.model, &x).and_then(|s| log_profile(&self.model, &x, &self.spec, phi, s)) {
                        Ok((v, _)) => v <= obs + TIE_TOLERANCE,
                        Err(_) => true,
                    }
                })
                .count();
            probes.push((point, hits as f64 / self.m as f64));
        }
        Ok(ProbeReport { phi, probes })
    }

    /// sd of λ along the fiber from the curvature of the log-likelihood.
    fn profile_sd(&self, phi: f64, lambda: f64) -> Option<f64> {
        let h = 1e-4 * (1.0 + lambda.abs());
        let ll = |l: f64| self.model.log_likelihood(&self.data, &(self.spec.chart)(phi, l));
        let curv = -(ll(lambda + h) - 2.0 * ll(lambda) + ll(lambda - h)) / (h * h);
        (curv > 0.0 && curv.is_finite()).then(|| curv.sqrt().recip())
    }

    /// Companion Gaussian family for φ: mean φ̂, variance ξ²·ġᵀJ⁻¹ġ.
    pub fn family(&self, xi: f64) -> Result<GaussianScalarFamily> {
        let t = &self.theta_hat;
        let grad: Vec<f64> = (0..t.len())
            .map(|j| {
                let h = 1e-6 * (1.0 + t[j].abs());
                let mut a = t.clone();
                let mut b = t.clone();
                a[j] += h;
                b[j] -= h;
                ((self.spec.interest)(&a) - (self.spec.interest)(&b)) / (2.0 * h)
            })
            .collect();
        let info = self
            .model
            .analytic_information(&self.data, t)
            .unwrap_or_else(|| fd_information(&self.model, &self.data, t));
        let g = DVector::from_vec(grad);
        let chol = info
            .cholesky()
            .ok_or_else(|| Error::SingularInformation("information at the MLE is not positive definite".into()))?;
        let var = g.dot(&chol.solve(&g));
        if !(var > 0.0 && var.is_finite()) {
            return Err(Error::SingularInformation(format!("delta-method variance {var}")));
        }
        GaussianScalarFamily::new(
            Anchor::new(vec![self.phi_hat], DMatrix::from_element(1, 1, 1.0 / var))?,
            xi,
        )
    }
}

impl<M: Model> PossibilityContour for ProfileContour<M> {
    fn dim(&self) -> usize {
        1
    }

    fn kind(&self) -> ContourKind {
        ContourKind::Profile
    }

    fn evaluate(&self, phi: &[f64], seed: u64) -> Evaluation {
        if phi.len() != 1 || !phi[0].is_finite() {
            return Evaluation::domain_violation();
        }
        match self.probe_report(phi[0], seed) {
            Ok(r) if !r.probes.is_empty() => Evaluation::ok(r.value()),
            Ok(_) => Evaluation::domain_violation(),
            Err(Error::ConstrainedOptimizer(_)) => Evaluation::domain_violation(),
            Err(_) => Evaluation::failed(),
        }
    }

    fn mode(&self) -> Option<Vec<f64>> {
        Some(vec![self.phi_hat])
    }

    fn monte_carlo_size(&self) -> Option<usize> {
        Some(self.m)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::GammaParam;

    fn data(seed: u64) -> Dataset {
        Gamma::new(GammaParam::ShapeScale).sample(&[2.5, 1.6], 20, &mut stream(seed, &[]))
    }

    #[test]
    fn offsets_layout() {
        let spec = ProfileSpec::gamma_mean(Gamma::new(GammaParam::ShapeScale));
        assert_eq!(spec.offsets(), vec![0.0, -0.5, 0.5, -1.0, 1.0]);
        assert_eq!(spec.clone().with_probes(1).offsets(), vec![0.0]);
        assert!(spec.with_probes(0).validate().is_err());
    }

    #[test]
    fn profile_likelihood_matches_grid_oracle() {
        let model = Gamma::new(GammaParam::ShapeScale);
        let d = data(1);
        let spec = ProfileSpec::gamma_mean(model);
        let t = model.mle(&d).unwrap();
        let phi_hat = t[0] * t[1];
        assert!((relative_profile_likelihood(&model, &d, &spec, phi_hat).unwrap() - 1.0).abs() < 1e-10);
        let sup = model.log_likelihood(&d, &t);
        for phi in [0.6 * phi_hat, 1.3 * phi_hat, 2.5 * phi_hat] {
            let grid = (1..40000)
                .map(|i| {
                    let k = 0.001 * i as f64;
                    model.log_likelihood(&d, &[k, phi / k])
                })
                .fold(f64::NEG_INFINITY, f64::max);
            let r = relative_profile_likelihood(&model, &d, &spec, phi).unwrap();
            assert!((r - (grid - sup).exp()).abs() < 1e-6, "{r} vs {}", (grid - sup).exp());
        }
        assert!(relative_profile_likelihood(&model, &d, &spec, 2.5 * phi_hat).unwrap() < 0.01);
    }

    #[test]
    fn reparametrization_invariance() {
        let d = data(2);
        let a = Gamma::new(GammaParam::ShapeScale);
        let b = Gamma::new(GammaParam::LogShapeLogScale);
        for phi in [2.0, 4.0, 6.0] {
            let ra = relative_profile_likelihood(&a, &d, &ProfileSpec::gamma_mean(a), phi).unwrap();
            let rb = relative_profile_likelihood(&b, &d, &ProfileSpec::gamma_mean(b), phi).unwrap();
            assert!((ra - rb).abs() < 1e-10);
        }
    }

    #[test]
    fn contour_is_one_at_estimate_and_decreases() {
        let model = Gamma::new(GammaParam::ShapeScale);
        let m = 300;
        let se = 0.5 / (m as f64).sqrt();
        for seed in 0..5 {
            let c = ProfileContour::new(model, data(10 + seed), ProfileSpec::gamma_mean(model), m).unwrap();
            let phi_hat = c.phi_hat();
            assert_eq!(c.evaluate(&[phi_hat], 3).value, 1.0);
            let right: Vec<f64> = (1..=20)
                .map(|i| c.evaluate(&[phi_hat * (1.0 + 0.05 * i as f64)], 3).value)
                .collect();
            let left: Vec<f64> = (1..=20)
                .map(|i| c.evaluate(&[phi_hat * (1.0 - 0.03 * i as f64)], 3).value)
                .collect();
            for w in right.windows(2).chain(left.windows(2)) {
                assert!(w[1] <= w[0] + 2.0 * se, "{w:?}");
            }
            assert!(right[19] < 0.05 && left[19] < 0.05);
        }
    }

    #[test]
    fn companion_family_uses_delta_method() {
        let model = Gamma::new(GammaParam::ShapeScale);
        let d = data(4);
        let c = ProfileContour::new(model, d.clone(), ProfileSpec::gamma_mean(model), 10).unwrap();
        let f = c.family(1.0).unwrap();
        let t = model.mle(&d).unwrap();
        let j = model.analytic_information(&d, &t).unwrap();
        let g = DVector::from_vec(vec![t[1], t[0]]);
        let var = g.dot(&(j.try_inverse().unwrap() * &g));
        assert!((f.covariance()[(0, 0)] - var).abs() < 1e-6 * var);
        assert_eq!(f.anchor.mean, vec![t[0] * t[1]]);
    }
}

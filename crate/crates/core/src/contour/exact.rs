use super::{ContourKind, Evaluation, PossibilityContour, TIE_TOLERANCE};
use crate::model::Bernoulli;
use crate::special::ln_choose;

/// log R(s, θ) for s successes in n binomial trials.
pub fn binomial_log_relative(n: u64, s: u64, theta: f64) -> f64 {
    let (s, n) = (s as f64, n as f64);
    Bernoulli::log_likelihood_counts(s, n, theta) - Bernoulli::log_likelihood_counts(s, n, s / n)
}

/// Exact binomial contour by enumerating s = 0..n:
/// Σ_s 1{R(s,θ) ≤ R(s_obs,θ)} p_θ(s).
pub fn exact_binomial_contour(n: u64, s_obs: u64, theta: f64) -> f64 {
    assert!(s_obs <= n, "s_obs must not exceed n");
    assert!((0.0..=1.0).contains(&theta), "θ must lie in [0,1]");
    let obs = binomial_log_relative(n, s_obs, theta);
    if obs == f64::NEG_INFINITY {
        return 0.0;
    }
    let mut total = 0.0;
    for s in 0..=n {
        let log_p = ln_choose(n, s) + Bernoulli::log_likelihood_counts(s as f64, n as f64, theta);
        if log_p == f64::NEG_INFINITY {
            continue;
        }
        if binomial_log_relative(n, s, theta) <= obs + TIE_TOLERANCE {
            total += log_p.exp();
        }
    }
    total.min(1.0)
}

#[derive(Debug, Clone, Copy)]
pub struct ExactBinomialContour {
    pub n: u64,
    pub s_obs: u64,
}

impl ExactBinomialContour {
    pub fn new(n: u64, s_obs: u64) -> Self {
        assert!(s_obs <= n);
        Self { n, s_obs }
    }
}

impl PossibilityContour for ExactBinomialContour {
    fn dim(&self) -> usize {
        1
    }

    fn kind(&self) -> ContourKind {
        ContourKind::ExactDiscrete
    }

    fn evaluate(&self, theta: &[f64], _seed: u64) -> Evaluation {
        let t = theta[0];
        if !(0.0..=1.0).contains(&t) {
            return Evaluation::domain_violation();
        }
        let v = exact_binomial_contour(self.n, self.s_obs, t);
        if v == 0.0 && binomial_log_relative(self.n, self.s_obs, t) == f64::NEG_INFINITY {
            return Evaluation::domain_violation();
        }
        Evaluation::ok(v)
    }

    fn mode(&self) -> Option<Vec<f64>> {
        Some(vec![self.s_obs as f64 / self.n as f64])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn peak_and_tail() {
        assert_eq!(exact_binomial_contour(15, 6, 0.4), 1.0);
        assert!(exact_binomial_contour(15, 6, 0.999) < 1e-6);
        assert_eq!(exact_binomial_contour(15, 6, 0.0), 0.0);
    }

    #[test]
    fn enumeration_oracle_at_quarter() {
        // Independent oracle: sort all outcomes by R(s, 0.25) and accumulate
        // pmf mass of outcomes no more plausible than s_obs = 6.
        let n = 15u64;
        let theta = 0.25f64;
        let pmf: Vec<f64> = (0..=n)
            .map(|s| {
                let c = (1..=s).fold(1.0, |acc, i| acc * (n - s + i) as f64 / i as f64);
                c * theta.powi(s as i32) * (1.0 - theta).powi((n - s) as i32)
            })
            .collect();
        let r = |s: u64| {
            let p = s as f64 / n as f64;
            let l = |q: f64| q.powi(s as i32) * (1.0 - q).powi((n - s) as i32);
            l(theta) / l(p)
        };
        let oracle: f64 = (0..=n)
            .filter(|&s| r(s) <= r(6) * (1.0 + 1e-12))
            .map(|s| pmf[s as usize])
            .sum();
        assert!((exact_binomial_contour(n, 6, theta) - oracle).abs() < 1e-12);
        assert!((oracle - 0.22854884341359138).abs() < 1e-12, "{oracle}");
    }
}

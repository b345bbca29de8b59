//! Special functions not covered by `statrs`, plus chi-square and normal
//! helpers with tail-accurate complements.

use libm::erfc;
use statrs::distribution::{ChiSquared, ContinuousCDF};
use statrs::function::gamma::{gamma_lr, ln_gamma};

pub use statrs::function::gamma::{digamma, ln_gamma as log_gamma};

/// Trigamma function ψ'(x) for x > 0.
pub fn trigamma(mut x: f64) -> f64 {
    if !(x > 0.0) {
        return f64::NAN;
    }
    let mut acc = 0.0;
    while x < 12.0 {
        acc += 1.0 / (x * x);
        x += 1.0;
    }
    let inv = 1.0 / x;
    let inv2 = inv * inv;
    // asymptotic series with Bernoulli-number coefficients
    acc + inv + inv2 / 2.0 + inv * inv2 * (1.0 / 6.0 - inv2 * (1.0 / 30.0 - inv2 * (1.0 / 42.0 - inv2 / 30.0)))
}

/// ChiSq(d) distribution function G_d(q).
pub fn chi2_cdf(d: usize, q: f64) -> f64 {
    if q <= 0.0 {
        return 0.0;
    }
    if q.is_infinite() {
        return 1.0;
    }
    let sf = chi2_sf(d, q);
    if sf < 0.5 {
        1.0 - sf
    } else {
        gamma_lr(d as f64 / 2.0, q / 2.0)
    }
}

/// 1 − G_d(q), accurate in the upper tail.
///
/// Uses the closed forms for d = 1, 2 and the recurrence
/// Q_{d+2}(q) = Q_d(q) + (q/2)^{d/2} e^{−q/2} / Γ(d/2 + 1).
pub fn chi2_sf(d: usize, q: f64) -> f64 {
    assert!(d >= 1, "chi-square degrees of freedom must be positive");
    if q <= 0.0 {
        return 1.0;
    }
    if q.is_infinite() {
        return 0.0;
    }
    let h = q / 2.0;
    let (mut sf, mut k) = if d % 2 == 1 {
        (erfc(h.sqrt()), 0.5)
    } else {
        ((-h).exp(), 1.0)
    };
    if d <= 2 {
        return sf;
    }
    // log of (q/2)^k e^{−q/2} / Γ(k+1)
    let mut log_term = k * h.ln() - h - ln_gamma(k + 1.0);
    let lh = h.ln();
    while k + 1.0 <= d as f64 / 2.0 {
        sf += log_term.exp();
        k += 1.0;
        log_term += lh - k.ln();
    }
    sf.min(1.0)
}

fn chi2_pdf(d: usize, q: f64) -> f64 {
    let k = d as f64 / 2.0;
    ((k - 1.0) * q.ln() - q / 2.0 - k * std::f64::consts::LN_2 - ln_gamma(k)).exp()
}

/// Quantile χ²_d(p), polished with Newton steps on the incomplete gamma.
pub fn chi2_quantile(d: usize, p: f64) -> f64 {
    assert!(d >= 1, "chi-square degrees of freedom must be positive");
    if p <= 0.0 {
        return 0.0;
    }
    if p >= 1.0 {
        return f64::INFINITY;
    }
    let dist = ChiSquared::new(d as f64).expect("positive degrees of freedom");
    let mut q = dist.inverse_cdf(p);
    for _ in 0..8 {
        let dens = chi2_pdf(d, q);
        if !(dens > 0.0) || !q.is_finite() {
            break;
        }
        // work on whichever tail keeps the residual well conditioned
        let resid = if p > 0.5 {
            (1.0 - p) - chi2_sf(d, q)
        } else {
            chi2_cdf(d, q) - p
        };
        let step = resid / dens;
        let next = q - step;
        if !(next > 0.0) {
            break;
        }
        if (next - q).abs() <= 1e-15 * q {
            q = next;
            break;
        }
        q = next;
    }
    q
}

pub fn norm_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

pub fn norm_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}

/// log Φ(x), accurate far into the lower tail.
pub fn norm_log_cdf(x: f64) -> f64 {
    if x > -30.0 {
        norm_cdf(x).ln()
    } else {
        // Mills-ratio expansion
        let x2 = x * x;
        -0.5 * x2 - (-x).ln() - 0.5 * (2.0 * std::f64::consts::PI).ln() + (1.0 - 1.0 / x2 + 3.0 / (x2 * x2)).ln()
    }
}

/// φ(x)/Φ(x), the inverse Mills ratio, stable for very negative x.
pub fn inv_mills(x: f64) -> f64 {
    if x > -30.0 {
        norm_pdf(x) / norm_cdf(x)
    } else {
        let x2 = x * x;
        -x / (1.0 - 1.0 / x2 + 3.0 / (x2 * x2))
    }
}

/// ln C(n, k).
pub fn ln_choose(n: u64, k: u64) -> f64 {
    ln_gamma(n as f64 + 1.0) - ln_gamma(k as f64 + 1.0) - ln_gamma((n - k) as f64 + 1.0)
}

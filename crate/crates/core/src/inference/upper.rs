use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::hypothesis::{dot, Hypothesis};
use super::search::{center_of, pattern_search, spread, Proposal, SearchBudget};
use crate::contour::{GaussianForm, PossibilityContour};
use crate::error::{Error, Result};
use crate::family::VariationalFamily;
use crate::special::chi2_sf;

/// An (approximate) supremum of the contour over a set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SupResult {
    pub value: f64,
    /// Where the supremum was attained (or approached).
    pub point: Option<Vec<f64>>,
    /// Computed in closed form or by exhaustive evaluation.
    pub exact: bool,
    /// No candidate point fell inside the set.
    pub empty_search: bool,
    pub evaluations: usize,
    pub budget: SearchBudget,
}

impl SupResult {
    fn exact(value: f64, point: Option<Vec<f64>>, evaluations: usize, budget: SearchBudget) -> Self {
        Self {
            value,
            point,
            exact: true,
            empty_search: false,
            evaluations,
            budget,
        }
    }
}

/// Π̄(H) = sup_{θ∈H} π(θ).
///
/// Closed-form Gaussian contours with box or half-space hypotheses are
/// handled exactly by minimizing the quadratic form over H; finite sets are
/// evaluated pointwise. Otherwise candidates from `proposal` (or the
/// contour's own Gaussian form) are restricted to H and the best one is
/// refined by pattern search. Monte Carlo contours are evaluated with common
/// random numbers (`budget.seed`) throughout.
pub fn upper_probability(
    contour: &dyn PossibilityContour,
    h: &Hypothesis,
    budget: &SearchBudget,
    proposal: Option<&dyn VariationalFamily>,
) -> Result<SupResult> {
    let d = contour.dim();
    h.validate(d)?;
    match h {
        Hypothesis::Union(parts) => {
            let mut best = SupResult::exact(0.0, None, 0, *budget);
            let mut evaluations = 0;
            for part in parts {
                let r = upper_probability(contour, part, budget, proposal)?;
                evaluations += r.evaluations;
                if r.value > best.value || best.point.is_none() && !r.empty_search {
                    best = r;
                }
            }
            best.evaluations = evaluations;
            best.empty_search = best.empty_search && !parts.is_empty();
            Ok(best)
        }
        Hypothesis::Finite(points) => {
            let values: Vec<f64> = points
                .par_iter()
                .map(|p| contour.evaluate(p, budget.seed).value)
                .collect();
            let i = argmax(&values);
            Ok(SupResult::exact(
                values[i],
                Some(points[i].clone()),
                points.len(),
                *budget,
            ))
        }
        Hypothesis::Box { .. } | Hypothesis::HalfSpace { .. } if contour.gaussian_form().is_some() => {
            let form = contour.gaussian_form().expect("checked");
            let (q, point) = gaussian_min_quadratic(&form, h)?;
            Ok(SupResult::exact(chi2_sf(d, q), Some(point), 0, *budget))
        }
        _ => search_sup(contour, h, budget, proposal),
    }
}

/// Π̲(H) = 1 − Π̄(H^c). The returned details describe the complement search.
pub fn lower_probability(
    contour: &dyn PossibilityContour,
    h: &Hypothesis,
    budget: &SearchBudget,
    proposal: Option<&dyn VariationalFamily>,
) -> Result<SupResult> {
    h.validate(contour.dim())?;
    let complement = h.complement()?;
    let mut r = upper_probability(contour, &complement, budget, proposal)?;
    r.value = 1.0 - r.value;
    Ok(r)
}

fn argmax(v: &[f64]) -> usize {
    v.iter().enumerate().fold(0, |b, (i, &x)| if x > v[b] { i } else { b })
}

/// min_{θ∈H} (θ−m)ᵀA(θ−m) and its minimizer for a box or half-space.
fn gaussian_min_quadratic(form: &GaussianForm, h: &Hypothesis) -> Result<(f64, Vec<f64>)> {
    let m = &form.mean;
    let a_mat = &form.precision;
    let quad = |x: &[f64]| {
        let v = DVector::from_iterator(m.len(), x.iter().zip(m).map(|(a, b)| a - b));
        (v.transpose() * a_mat * &v)[(0, 0)]
    };
    match h {
        Hypothesis::HalfSpace { a, b } => {
            let r = dot(a, m) - b;
            if r > 0.0 {
                return Ok((0.0, m.clone()));
            }
            let chol = a_mat
                .clone()
                .cholesky()
                .ok_or_else(|| Error::SingularInformation("precision is not positive definite".into()))?;
            let ainv_a = chol.solve(&DVector::from_column_slice(a));
            let s = dot(a, ainv_a.as_slice());
            let point = m.iter().zip(ainv_a.iter()).map(|(mi, v)| mi - r * v / s).collect();
            Ok((r * r / s, point))
        }
        Hypothesis::Box { lo, hi } => {
            if h.contains(m) {
                return Ok((0.0, m.clone()));
            }
            let x = box_qp(a_mat, m, lo, hi);
            Ok((quad(&x), x))
        }
        _ => unreachable!("only boxes and half-spaces have closed forms"),
    }
}

/// Coordinate descent for min (x−m)ᵀA(x−m) over lo ≤ x ≤ hi.
fn box_qp(a: &DMatrix<f64>, m: &[f64], lo: &[f64], hi: &[f64]) -> Vec<f64> {
    let d = m.len();
    let mut x: Vec<f64> = (0..d).map(|i| m[i].clamp(lo[i], hi[i])).collect();
    for _ in 0..100_000 {
        let mut change: f64 = 0.0;
        for i in 0..d {
            let off: f64 = (0..d).filter(|&j| j != i).map(|j| a[(i, j)] * (x[j] - m[j])).sum();
            let xi = (m[i] - off / a[(i, i)]).clamp(lo[i], hi[i]);
            change = change.max((xi - x[i]).abs());
            x[i] = xi;
        }
        if change <= 1e-14 * (1.0 + x.iter().map(|v| v.abs()).fold(0.0, f64::max)) {
            break;
        }
    }
    x
}

fn search_sup(
    contour: &dyn PossibilityContour,
    h: &Hypothesis,
    budget: &SearchBudget,
    proposal: Option<&dyn VariationalFamily>,
) -> Result<SupResult> {
    let seed = budget.seed;
    if let Some(mode) = contour.mode() {
        if h.contains(&mode) {
            let v = contour.evaluate(&mode, seed).value;
            if v >= 1.0 {
                return Ok(SupResult::exact(v, Some(mode), 1, *budget));
            }
        }
    }
    let proposal = Proposal::new(contour, proposal)?;
    let center = contour
        .mode()
        .unwrap_or_else(|| center_of(contour, &proposal.candidates(64, &[], seed)));
    let raw = proposal.candidates(budget.candidates, &center, seed);
    let step = spread(&raw, contour.dim());
    let mut pool: Vec<Vec<f64>> = raw
        .iter()
        .filter_map(|p| {
            if h.contains(p) {
                Some(p.clone())
            } else {
                h.project(p).filter(|q| h.contains(q))
            }
        })
        .collect();
    if h.contains(&center) {
        pool.push(center.clone());
    }
    if pool.is_empty() {
        return Ok(SupResult {
            value: 0.0,
            point: None,
            exact: false,
            empty_search: true,
            evaluations: 0,
            budget: *budget,
        });
    }
    let values: Vec<f64> = pool.par_iter().map(|p| contour.evaluate(p, seed).value).collect();
    let i = argmax(&values);
    let objective = |x: &[f64]| h.contains(x).then(|| contour.evaluate(x, seed).value);
    let (point, value, calls) = pattern_search(pool[i].clone(), values[i], step, budget.refine_steps, &objective);
    Ok(SupResult {
        value,
        point: Some(point),
        exact: false,
        empty_search: false,
        evaluations: pool.len() + calls,
        budget: *budget,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::family::GaussianScalarFamily;
    use crate::model::Anchor;
    use crate::rng::stream;
    use proptest::prelude::*;
    use rand_distr::{Distribution, StandardNormal};

    fn gaussian(d: usize, seed: u64) -> GaussianScalarFamily {
        let mut rng = stream(seed, &[]);
        let a: DMatrix<f64> = DMatrix::from_fn(d, d, |_, _| StandardNormal.sample(&mut rng));
        let j = &a * a.transpose() + DMatrix::identity(d, d);
        GaussianScalarFamily::new(Anchor::new(vec![0.3; d], j).unwrap(), 1.0).unwrap()
    }

    /// Same contour without the closed form, forcing the search path.
    struct Opaque(GaussianScalarFamily);

    impl PossibilityContour for Opaque {
        fn dim(&self) -> usize {
            self.0.dim()
        }
        fn kind(&self) -> crate::contour::ContourKind {
            crate::contour::ContourKind::MonteCarlo
        }
        fn evaluate(&self, theta: &[f64], seed: u64) -> crate::contour::Evaluation {
            self.0.evaluate(theta, seed)
        }
    }

    #[test]
    fn half_space_boundary_value() {
        let f = GaussianScalarFamily::new(Anchor::new(vec![0.0], DMatrix::identity(1, 1)).unwrap(), 1.0).unwrap();
        let h = Hypothesis::HalfSpace {
            a: vec![1.0],
            b: 1.6449,
        };
        let r = upper_probability(&f, &h, &SearchBudget::default(), None).unwrap();
        assert!(r.exact && (r.value - 0.1).abs() < 1e-4);
        let whole = upper_probability(&f, &Hypothesis::whole(1), &SearchBudget::default(), None).unwrap();
        assert_eq!(whole.value, 1.0);
        let low = lower_probability(&f, &Hypothesis::whole(1), &SearchBudget::default(), None).unwrap();
        assert_eq!(low.value, 1.0);
    }

    #[test]
    fn search_agrees_with_closed_form() {
        let f = gaussian(2, 4);
        let budget = SearchBudget::default();
        let hs = [
            Hypothesis::HalfSpace {
                a: vec![1.0, -0.5],
                b: 1.5,
            },
            Hypothesis::Box {
                lo: vec![1.0, -1.0],
                hi: vec![2.0, 0.0],
            },
            Hypothesis::Box {
                lo: vec![f64::NEG_INFINITY, 1.2],
                hi: vec![0.0, f64::INFINITY],
            },
        ];
        for h in &hs {
            let exact = upper_probability(&f, h, &budget, None).unwrap().value;
            let approx = upper_probability(&Opaque(f.clone()), h, &budget, Some(&f)).unwrap();
            assert!(!approx.exact);
            assert!(
                approx.value <= exact + 1e-9 && exact - approx.value < 1e-3,
                "{exact} vs {}",
                approx.value
            );
        }
    }

    #[test]
    fn empty_search_flagged() {
        let f = gaussian(1, 1);
        let h = Hypothesis::predicate(1, |_| false);
        let r = upper_probability(&Opaque(f.clone()), &h, &SearchBudget::default(), Some(&f)).unwrap();
        assert!(r.empty_search && r.value == 0.0);
        assert!(matches!(
            lower_probability(&f, &h, &SearchBudget::default(), None),
            Err(Error::NoComplement)
        ));
    }

    #[test]
    fn necessity_curve_is_nonincreasing() {
        let f = gaussian(3, 2);
        let budget = SearchBudget::default();
        let mut prev = f64::INFINITY;
        for k in 0..20 {
            let gamma = -1.0 + 0.15 * k as f64;
            let h = Hypothesis::HalfSpace {
                a: vec![1.0, 0.0, 0.0],
                b: gamma,
            };
            let v = lower_probability(&f, &h, &budget, None).unwrap().value;
            assert!(v <= prev + 1e-12);
            prev = v;
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn nested_boxes_are_monotone(seed in 0u64..500, l in -3.0f64..0.0, w in 0.1f64..2.0, grow in 0.0f64..1.0) {
            let f = gaussian(2, seed);
            let b = SearchBudget::default();
            let inner = Hypothesis::Box { lo: vec![l, l], hi: vec![l + w, l + w] };
            let outer = Hypothesis::Box { lo: vec![l - grow, l - grow], hi: vec![l + w + grow, l + w + grow] };
            let a = upper_probability(&f, &inner, &b, None).unwrap().value;
            let c = upper_probability(&f, &outer, &b, None).unwrap().value;
            prop_assert!(a <= c + 1e-12);
        }

        #[test]
        fn union_is_maxitive(seed in 0u64..500, b1 in -2.0f64..2.0, b2 in -2.0f64..2.0) {
            let f = gaussian(2, seed);
            let budget = SearchBudget::default();
            let h1 = Hypothesis::HalfSpace { a: vec![1.0, 0.3], b: b1 };
            let h2 = Hypothesis::Box { lo: vec![b2, b2], hi: vec![b2 + 0.5, b2 + 0.5] };
            let u = upper_probability(&f, &Hypothesis::Union(vec![h1.clone(), h2.clone()]), &budget, None).unwrap().value;
            let m = upper_probability(&f, &h1, &budget, None).unwrap().value.max(upper_probability(&f, &h2, &budget, None).unwrap().value);
            prop_assert!((u - m).abs() <= 1e-3);
            // the search path obeys maxitivity too
            let o = Opaque(f.clone());
            let us = upper_probability(&o, &Hypothesis::Union(vec![h1.clone(), h2.clone()]), &budget, Some(&f)).unwrap().value;
            let ms = upper_probability(&o, &h1, &budget, Some(&f)).unwrap().value.max(upper_probability(&o, &h2, &budget, Some(&f)).unwrap().value);
            prop_assert!((us - ms).abs() <= 1e-3);
        }

        #[test]
        fn conjugacy(seed in 0u64..500, b in -2.0f64..2.0) {
            let f = gaussian(2, seed);
            let budget = SearchBudget::default();
            let h = Hypothesis::HalfSpace { a: vec![0.4, -1.0], b };
            let lower = lower_probability(&f, &h, &budget, None).unwrap().value;
            let upper_c = upper_probability(&f, &h.complement().unwrap(), &budget, None).unwrap().value;
            prop_assert_eq!(lower + upper_c, 1.0);
        }
    }
}

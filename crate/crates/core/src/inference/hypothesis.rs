use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A subset H of the parameter space.
#[derive(Clone)]
pub enum Hypothesis {
    /// lo ≤ θ ≤ hi coordinatewise; infinite bounds allowed.
    Box {
        lo: Vec<f64>,
        hi: Vec<f64>,
    },
    /// a·θ > b.
    HalfSpace {
        a: Vec<f64>,
        b: f64,
    },
    Finite(Vec<Vec<f64>>),
    Union(Vec<Hypothesis>),
    Predicate {
        dim: usize,
        test: Arc<dyn Fn(&[f64]) -> bool + Send + Sync>,
    },
}

impl fmt::Debug for Hypothesis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Hypothesis::Box { lo, hi } => f.debug_struct("Box").field("lo", lo).field("hi", hi).finish(),
            Hypothesis::HalfSpace { a, b } => f.debug_struct("HalfSpace").field("a", a).field("b", b).finish(),
            Hypothesis::Finite(p) => f.debug_tuple("Finite").field(p).finish(),
            Hypothesis::Union(h) => f.debug_tuple("Union").field(h).finish(),
            Hypothesis::Predicate { dim, .. } => f.debug_struct("Predicate").field("dim", dim).finish_non_exhaustive(),
        }
    }
}

impl Hypothesis {
    /// The whole of ℝ^d.
    pub fn whole(dim: usize) -> Self {
        Hypothesis::Box {
            lo: vec![f64::NEG_INFINITY; dim],
            hi: vec![f64::INFINITY; dim],
        }
    }

    pub fn predicate(dim: usize, test: impl Fn(&[f64]) -> bool + Send + Sync + 'static) -> Self {
        Hypothesis::Predicate {
            dim,
            test: Arc::new(test),
        }
    }

    /// Dimension, or `None` for an empty union.
    pub fn dim(&self) -> Option<usize> {
        match self {
            Hypothesis::Box { lo, .. } => Some(lo.len()),
            Hypothesis::HalfSpace { a, .. } => Some(a.len()),
            Hypothesis::Finite(p) => p.first().map(Vec::len),
            Hypothesis::Union(h) => h.iter().find_map(Hypothesis::dim),
            Hypothesis::Predicate { dim, .. } => Some(*dim),
        }
    }

    pub fn validate(&self, dim: usize) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidInput(m));
        match self {
            Hypothesis::Box { lo, hi } => {
                if lo.len() != dim || hi.len() != dim {
                    return bad(format!("box bounds must have length {dim}"));
                }
                if lo.iter().zip(hi).any(|(l, h)| l.is_nan() || h.is_nan() || l > h) {
                    return bad("box is empty".into());
                }
            }
            Hypothesis::HalfSpace { a, b } => {
                if a.len() != dim || b.is_nan() || a.iter().all(|v| *v == 0.0) || a.iter().any(|v| !v.is_finite()) {
                    return bad(format!("half-space needs a nonzero finite a of length {dim}"));
                }
            }
            Hypothesis::Finite(p) => {
                if p.is_empty() || p.iter().any(|x| x.len() != dim) {
                    return bad(format!("finite hypothesis needs points of length {dim}"));
                }
            }
            Hypothesis::Union(h) => h.iter().try_for_each(|x| x.validate(dim))?,
            Hypothesis::Predicate { dim: d, .. } => {
                if *d != dim {
                    return bad(format!("predicate has dimension {d}, expected {dim}"));
                }
            }
        }
        Ok(())
    }

    pub fn contains(&self, theta: &[f64]) -> bool {
        match self {
            Hypothesis::Box { lo, hi } => theta.iter().zip(lo.iter().zip(hi)).all(|(t, (l, h))| l <= t && t <= h),
            Hypothesis::HalfSpace { a, b } => dot(a, theta) > *b,
            Hypothesis::Finite(p) => p.iter().any(|x| x.as_slice() == theta),
            Hypothesis::Union(h) => h.iter().any(|x| x.contains(theta)),
            Hypothesis::Predicate { test, .. } => test(theta),
        }
    }

    /// Complement, up to boundaries (which do not affect suprema of
    /// continuous contours). Boxes map to unions of half-spaces.
    pub fn complement(&self) -> Result<Hypothesis> {
        match self {
            Hypothesis::Box { lo, hi } => {
                let d = lo.len();
                let mut parts = Vec::new();
                for i in 0..d {
                    let e = |s: f64| (0..d).map(|j| if i == j { s } else { 0.0 }).collect::<Vec<_>>();
                    if lo[i].is_finite() {
                        parts.push(Hypothesis::HalfSpace { a: e(-1.0), b: -lo[i] });
                    }
                    if hi[i].is_finite() {
                        parts.push(Hypothesis::HalfSpace { a: e(1.0), b: hi[i] });
                    }
                }
                Ok(Hypothesis::Union(parts))
            }
            Hypothesis::HalfSpace { a, b } => Ok(Hypothesis::HalfSpace {
                a: a.iter().map(|v| -v).collect(),
                b: -b,
            }),
            _ => Err(Error::NoComplement),
        }
    }

    /// A point of H nearest (in the Euclidean sense, roughly) to θ, for the
    /// shapes where that is cheap.
    pub(crate) fn project(&self, theta: &[f64]) -> Option<Vec<f64>> {
        match self {
            Hypothesis::Box { lo, hi } => Some(
                theta
                    .iter()
                    .zip(lo.iter().zip(hi))
                    .map(|(t, (l, h))| t.clamp(*l, *h))
                    .collect(),
            ),
            Hypothesis::HalfSpace { a, b } => {
                let gap = b - dot(a, theta);
                if gap < 0.0 {
                    return Some(theta.to_vec());
                }
                let norm2 = dot(a, a);
                let push = gap / norm2 + 1e-9 * (1.0 + b.abs()) / norm2.sqrt();
                Some(theta.iter().zip(a).map(|(t, ai)| t + push * ai).collect())
            }
            _ => None,
        }
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Serializable hypothesis description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum HypothesisSpec {
    /// Per-axis [lo, hi]; `null` bounds are infinite.
    Box {
        bounds: Vec<[Option<f64>; 2]>,
    },
    HalfSpace {
        a: Vec<f64>,
        b: f64,
    },
    Finite {
        points: Vec<Vec<f64>>,
    },
    Union {
        parts: Vec<HypothesisSpec>,
    },
}

impl From<&HypothesisSpec> for Hypothesis {
    fn from(spec: &HypothesisSpec) -> Self {
        match spec {
            HypothesisSpec::Box { bounds } => Hypothesis::Box {
                lo: bounds.iter().map(|b| b[0].unwrap_or(f64::NEG_INFINITY)).collect(),
                hi: bounds.iter().map(|b| b[1].unwrap_or(f64::INFINITY)).collect(),
            },
            HypothesisSpec::HalfSpace { a, b } => Hypothesis::HalfSpace { a: a.clone(), b: *b },
            HypothesisSpec::Finite { points } => Hypothesis::Finite(points.clone()),
            HypothesisSpec::Union { parts } => Hypothesis::Union(parts.iter().map(Hypothesis::from).collect()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn box_complement_is_outside() {
        let h = Hypothesis::Box {
            lo: vec![0.0, f64::NEG_INFINITY],
            hi: vec![1.0, 2.0],
        };
        let c = h.complement().unwrap();
        for p in [[0.5, 0.0], [-0.5, 0.0], [0.5, 3.0], [2.0, -9.0]] {
            assert_ne!(h.contains(&p), c.contains(&p), "{p:?}");
        }
        match Hypothesis::whole(2).complement().unwrap() {
            Hypothesis::Union(p) => assert!(p.is_empty()),
            other => panic!("{other:?}"),
        }
        assert!(matches!(
            Hypothesis::predicate(1, |_| true).complement(),
            Err(Error::NoComplement)
        ));
    }

    #[test]
    fn projection_lands_inside() {
        let h = Hypothesis::HalfSpace {
            a: vec![1.0, 2.0],
            b: 3.0,
        };
        let p = h.project(&[0.0, 0.0]).unwrap();
        assert!(h.contains(&p));
        assert!((dot(&[1.0, 2.0], &p) - 3.0).abs() < 1e-6);
    }

    #[test]
    fn spec_roundtrip() {
        let json = r#"{"type":"box","bounds":[[null,0.5],[0.0,0.5]]}"#;
        let spec: HypothesisSpec = serde_json::from_str(json).unwrap();
        let h = Hypothesis::from(&spec);
        assert!(h.contains(&[-4.0, 0.2]) && !h.contains(&[0.0, 0.7]));
    }
}

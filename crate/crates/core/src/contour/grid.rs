use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{EvalStatus, PossibilityContour};
use crate::error::{Error, Result};
use crate::rng::derive_seed;

/// `count` equally spaced nodes from `min` to `max` inclusive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AxisSpec {
    pub min: f64,
    pub max: f64,
    #[serde(default = "default_count")]
    pub count: usize,
}

fn default_count() -> usize {
    100
}

impl AxisSpec {
    pub fn new(min: f64, max: f64, count: usize) -> Self {
        Self { min, max, count }
    }

    pub fn node(&self, i: usize) -> f64 {
        if self.count <= 1 {
            self.min
        } else {
            self.min + (self.max - self.min) * i as f64 / (self.count - 1) as f64
        }
    }

    pub fn spacing(&self) -> f64 {
        if self.count <= 1 {
            1.0
        } else {
            (self.max - self.min) / (self.count - 1) as f64
        }
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.count).map(|i| self.node(i)).collect()
    }

    fn validate(&self) -> Result<()> {
        if self.count == 0 || !self.min.is_finite() || !self.max.is_finite() || self.max < self.min {
            return Err(Error::InvalidInput(format!("bad grid axis {self:?}")));
        }
        Ok(())
    }
}

/// Contour values on a rectangular grid; the first axis varies slowest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContourGrid {
    pub axes: Vec<AxisSpec>,
    pub values: Vec<f64>,
    pub status: Vec<EvalStatus>,
}

impl ContourGrid {
    pub fn dim(&self) -> usize {
        self.axes.len()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn node(&self, mut index: usize) -> Vec<f64> {
        let mut coords = vec![0.0; self.axes.len()];
        for (k, axis) in self.axes.iter().enumerate().rev() {
            coords[k] = axis.node(index % axis.count);
            index /= axis.count;
        }
        coords
    }

    pub fn argmax(&self) -> usize {
        self.values
            .iter()
            .enumerate()
            .fold(
                (0, f64::NEG_INFINITY),
                |best, (i, &v)| {
                    if v > best.1 {
                        (i, v)
                    } else {
                        best
                    }
                },
            )
            .0
    }

    /// Riemann-sum L1 distance ∫|π − π'| over the grid.
    pub fn l1_distance(&self, other: &ContourGrid) -> f64 {
        assert_eq!(self.axes, other.axes, "grids must share axes");
        let cell: f64 = self.axes.iter().map(AxisSpec::spacing).product();
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .sum::<f64>()
            * cell
    }

    /// One row per node: coordinates, value, status.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header: Vec<String> = (1..=self.dim()).map(|k| format!("theta{k}")).collect();
        header.push("value".into());
        header.push("status".into());
        w.write_record(&header)?;
        for i in 0..self.len() {
            let mut row: Vec<String> = self.node(i).iter().map(|v| v.to_string()).collect();
            row.push(self.values[i].to_string());
            row.push(
                serde_json::to_value(self.status[i])?
                    .as_str()
                    .unwrap_or_default()
                    .to_string(),
            );
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Evaluate `contour` at every grid node. Node `i` uses seed
/// `hash(seed, i)`, so the result does not depend on `threads`.
pub fn grid_eval(
    contour: &dyn PossibilityContour,
    axes: &[AxisSpec],
    seed: u64,
    threads: Option<usize>,
) -> Result<ContourGrid> {
    if axes.len() != contour.dim() {
        return Err(Error::InvalidInput(format!(
            "{} axes for a {}-dimensional contour",
            axes.len(),
            contour.dim()
        )));
    }
    for a in axes {
        a.validate()?;
    }
    let total: usize = axes.iter().map(|a| a.count).product();
    let mut grid = ContourGrid {
        axes: axes.to_vec(),
        values: Vec::new(),
        status: Vec::new(),
    };
    let eval = |i: usize| contour.evaluate(&grid.node(i), derive_seed(seed, &[i as u64]));
    let results: Vec<_> = match threads {
        Some(t) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(t.max(1))
                .build()
                .map_err(|e| Error::Config(e.to_string()))?;
            pool.install(|| (0..total).into_par_iter().map(eval).collect())
        }
        None => (0..total).into_par_iter().map(eval).collect(),
    };
    grid.values = results.iter().map(|e| e.value).collect();
    grid.status = results.iter().map(|e| e.status).collect();
    Ok(grid)
}

/// Indices of nodes with value strictly above α.
pub fn alpha_cut(grid: &ContourGrid, alpha: f64) -> Vec<usize> {
    assert!(alpha > 0.0 && alpha < 1.0, "α must lie in (0,1)");
    (0..grid.len()).filter(|&i| grid.values[i] > alpha).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::contour::{exact_binomial_contour, ExactBinomialContour, McContour};
    use crate::model::{Bernoulli, BivariateCorrelation, Model};
    use crate::rng::stream;

    #[test]
    fn matches_pointwise_exact() {
        let c = ExactBinomialContour::new(15, 6);
        let g = grid_eval(&c, &[AxisSpec::new(0.1, 0.5, 3)], 0, None).unwrap();
        for i in 0..3 {
            assert_eq!(g.values[i], exact_binomial_contour(15, 6, g.node(i)[0]));
        }
    }

    #[test]
    fn alpha_cut_is_contiguous_around_mle() {
        let c = ExactBinomialContour::new(15, 6);
        let g = grid_eval(&c, &[AxisSpec::new(0.0, 1.0, 201)], 0, Some(1)).unwrap();
        let cut = alpha_cut(&g, 0.1);
        assert!(cut.windows(2).all(|w| w[1] == w[0] + 1));
        assert!(cut.contains(&80));
        let ones = ContourGrid {
            axes: g.axes.clone(),
            values: vec![1.0; 201],
            status: g.status.clone(),
        };
        assert_eq!(alpha_cut(&ones, 0.1).len(), 201);
    }

    #[test]
    fn node_layout_row_major() {
        let g = ContourGrid {
            axes: vec![AxisSpec::new(0.0, 1.0, 2), AxisSpec::new(10.0, 12.0, 3)],
            values: vec![0.0; 6],
            status: vec![EvalStatus::Ok; 6],
        };
        assert_eq!(g.node(0), vec![0.0, 10.0]);
        assert_eq!(g.node(1), vec![0.0, 11.0]);
        assert_eq!(g.node(5), vec![1.0, 12.0]);
    }

    #[test]
    fn thread_count_invariance() {
        let model = BivariateCorrelation;
        let data = model.sample(&[0.5], 30, &mut stream(2, &[]));
        let c = McContour::new(model, data, 50).unwrap();
        let axes = [AxisSpec::new(-0.9, 0.9, 12)];
        let a = grid_eval(&c, &axes, 17, Some(1)).unwrap();
        let b = grid_eval(&c, &axes, 17, Some(3)).unwrap();
        assert_eq!(a, b);
        for i in 0..a.len() {
            assert_eq!(a.values[i], c.evaluate(&a.node(i), derive_seed(17, &[i as u64])).value);
        }
    }

    #[test]
    fn domain_violations_flagged() {
        let c = McContour::new(Bernoulli, Bernoulli::dataset(15, 6), 20).unwrap();
        let g = grid_eval(&c, &[AxisSpec::new(0.0, 1.0, 3)], 0, None).unwrap();
        assert_eq!(g.status[0], EvalStatus::DomainViolation);
        assert_eq!(g.values[0], 0.0);
        let mut buf = Vec::new();
        g.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 4);
        assert!(text.starts_with("theta1,value,status"));
    }
}

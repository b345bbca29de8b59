use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::Result;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Termination {
    Converged,
    MaxIterations,
}

/// ξ^{(t)} and the objective estimate evaluated there.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub t: usize,
    pub xi: Vec<f64>,
    pub objective: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitTrace {
    pub records: Vec<TraceRecord>,
    pub xi_hat: Vec<f64>,
    pub termination: Termination,
    /// Contour evaluations that failed over the whole run.
    pub failures: usize,
}

impl FitTrace {
    pub fn iterations(&self) -> usize {
        self.records.len()
    }

    /// Columns: t, xi_1..xi_d, objective_1..objective_d.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let d = self.xi_hat.len();
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["t".to_string()];
        header.extend((1..=d).map(|s| format!("xi_{s}")));
        header.extend((1..=d).map(|s| format!("objective_{s}")));
        w.write_record(&header)?;
        for r in &self.records {
            let mut row = vec![r.t.to_string()];
            row.extend(r.xi.iter().map(f64::to_string));
            row.extend(r.objective.iter().map(f64::to_string));
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }
}

use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Observed data: a response column, optional covariates (n × p) and
/// optional censoring indicators (`true` = fully observed).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub responses: Vec<f64>,
    #[serde(default)]
    pub covariates: Option<DMatrix<f64>>,
    #[serde(default)]
    pub observed: Option<Vec<bool>>,
}

impl Dataset {
    pub fn new(responses: Vec<f64>) -> Self {
        Self {
            responses,
            covariates: None,
            observed: None,
        }
    }

    pub fn with_covariates(mut self, covariates: DMatrix<f64>) -> Result<Self> {
        if covariates.nrows() != self.responses.len() {
            return Err(Error::InvalidInput(format!(
                "covariates have {} rows, responses {}",
                covariates.nrows(),
                self.responses.len()
            )));
        }
        self.covariates = Some(covariates);
        Ok(self)
    }

    pub fn with_observed(mut self, observed: Vec<bool>) -> Result<Self> {
        if observed.len() != self.responses.len() {
            return Err(Error::InvalidInput(format!(
                "censor column has {} entries, responses {}",
                observed.len(),
                self.responses.len()
            )));
        }
        self.observed = Some(observed);
        Ok(self)
    }

    pub fn n(&self) -> usize {
        self.responses.len()
    }

    /// Column lengths agree and every entry is finite.
    pub fn validate(&self) -> Result<()> {
        let n = self.n();
        if !self.responses.iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidInput("non-finite response".into()));
        }
        if let Some(c) = &self.covariates {
            if c.nrows() != n || !c.iter().all(|v| v.is_finite()) {
                return Err(Error::InvalidInput("covariate matrix malformed".into()));
            }
        }
        if let Some(o) = &self.observed {
            if o.len() != n {
                return Err(Error::InvalidInput("censor column length mismatch".into()));
            }
        }
        Ok(())
    }

    /// Read a dataset from a comma-separated file with a header row.
    pub fn from_csv(path: impl AsRef<Path>, roles: &ColumnRoles) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new().comment(Some(b'#')).from_path(path.as_ref())?;
        Self::read(&mut reader, roles)
    }

    pub fn from_csv_reader<R: std::io::Read>(source: R, roles: &ColumnRoles) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(source);
        Self::read(&mut reader, roles)
    }

    fn read<R: std::io::Read>(reader: &mut csv::Reader<R>, roles: &ColumnRoles) -> Result<Self> {
        let headers = reader.headers()?.clone();
        let index = |name: &str| -> Result<usize> {
            headers
                .iter()
                .position(|h| h.trim() == name)
                .ok_or_else(|| Error::Config(format!("column '{name}' not found in CSV header")))
        };
        let response = index(&roles.response)?;
        let covariates = roles.covariates.iter().map(|c| index(c)).collect::<Result<Vec<_>>>()?;
        let censor = roles.censor.as_deref().map(index).transpose()?;

        let parse = |field: &str, row: usize| -> Result<f64> {
            field
                .trim()
                .parse::<f64>()
                .map_err(|_| Error::InvalidInput(format!("row {row}: cannot parse '{field}' as a number")))
        };

        let mut responses = Vec::new();
        let mut cov_rows: Vec<f64> = Vec::new();
        let mut observed = Vec::new();
        for (row, record) in reader.records().enumerate() {
            let record = record?;
            let get = |i: usize| {
                record
                    .get(i)
                    .ok_or_else(|| Error::InvalidInput(format!("row {row}: missing field")))
            };
            responses.push(parse(get(response)?, row)?);
            for &c in &covariates {
                cov_rows.push(parse(get(c)?, row)?);
            }
            if let Some(c) = censor {
                let v = parse(get(c)?, row)?;
                if v != 0.0 && v != 1.0 {
                    return Err(Error::InvalidInput(format!("row {row}: censor flag must be 0 or 1")));
                }
                observed.push(v == 1.0);
            }
        }
        let mut data = Dataset::new(responses);
        if !covariates.is_empty() {
            let n = data.n();
            data = data.with_covariates(DMatrix::from_row_slice(n, covariates.len(), &cov_rows))?;
        }
        if censor.is_some() {
            data = data.with_observed(observed)?;
        }
        data.validate()?;
        Ok(data)
    }
}

/// Names of the CSV columns playing each role.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ColumnRoles {
    pub response: String,
    #[serde(default)]
    pub covariates: Vec<String>,
    #[serde(default)]
    pub censor: Option<String>,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reads_roles_from_csv() {
        let text = "# comment\ny,u,t\n1.5,0.1,1\n2.5,0.2,0\n";
        let roles = ColumnRoles {
            response: "y".into(),
            covariates: vec!["u".into()],
            censor: Some("t".into()),
        };
        let d = Dataset::from_csv_reader(text.as_bytes(), &roles).unwrap();
        assert_eq!(d.responses, vec![1.5, 2.5]);
        assert_eq!(d.covariates.unwrap()[(1, 0)], 0.2);
        assert_eq!(d.observed.unwrap(), vec![true, false]);
    }

    #[test]
    fn rejects_bad_censor_flags_and_missing_columns() {
        let roles = ColumnRoles {
            response: "y".into(),
            covariates: vec![],
            censor: Some("t".into()),
        };
        assert!(Dataset::from_csv_reader("y,t\n1,2\n".as_bytes(), &roles).is_err());
        let roles = ColumnRoles {
            response: "z".into(),
            ..Default::default()
        };
        assert!(matches!(
            Dataset::from_csv_reader("y\n1\n".as_bytes(), &roles),
            Err(Error::Config(_))
        ));
    }
}

//! Problem files.
//!
//! ```toml
//! labels = ["x1", "x2"]          # optional, one per constraint
//! A = [[0.5, 0.7], [0.2, 0.7]]   # row-major, m rows of length T
//! b = [2.0, 0.5]
//! mean = [0.0, 0.0]              # optional, length T
//! covariance = [[1.0, 0.0], [0.0, 1.0]]  # optional, T x T
//! ```

use std::path::Path;

use gauss_polytope_core::{
    normalize_last_column, whiten, GaussianSpec, Matrix, Normalized, PolytopeProblem,
};
use serde::Deserialize;

use crate::CliError;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemFile {
    #[serde(rename = "A")]
    pub a: Vec<Vec<f64>>,
    pub b: Vec<f64>,
    pub mean: Option<Vec<f64>>,
    pub covariance: Option<Vec<Vec<f64>>>,
    pub labels: Option<Vec<String>>,
}

/// A problem ready for the solver, plus the standard-normal form the
/// oracles sample from.
#[derive(Debug)]
pub struct Loaded {
    /// `A' z <= b'` with `z ~ N(0, I)`, before column normalization.
    pub standard: PolytopeProblem,
    pub normalized: Normalized,
}

fn ragged(field: &str, rows: &[Vec<f64>]) -> Result<(), CliError> {
    if let Some(first) = rows.first() {
        for (i, r) in rows.iter().enumerate() {
            if r.len() != first.len() {
                return Err(CliError::Parse(format!(
                    "{field}: row {i} has {} entries, row 0 has {}",
                    r.len(),
                    first.len()
                )));
            }
        }
    }
    Ok(())
}

pub fn parse(text: &str) -> Result<ProblemFile, CliError> {
    let file: ProblemFile = toml::from_str(text).map_err(|e| CliError::Parse(e.to_string()))?;
    ragged("A", &file.a)?;
    if let Some(c) = &file.covariance {
        ragged("covariance", c)?;
    }
    Ok(file)
}

pub fn load(path: &Path) -> Result<Loaded, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Resource(format!("cannot read {}: {e}", path.display())))?;
    parse(&text)?.into_problem()
}

impl ProblemFile {
    pub fn into_problem(self) -> Result<Loaded, CliError> {
        let parse_err =
            |field: &str, e: gauss_polytope_core::Error| CliError::Parse(format!("{field}: {e}"));
        if self.a.is_empty() {
            return Err(CliError::Parse("A: no rows".into()));
        }
        let m = self.a.len();
        let cols = self.a[0].len();
        if self.b.len() != m {
            return Err(CliError::Parse(format!(
                "b: has {} entries, A has {m} rows",
                self.b.len()
            )));
        }
        if let Some(l) = &self.labels {
            if l.len() != m {
                return Err(CliError::Parse(format!(
                    "labels: has {} entries, A has {m} rows",
                    l.len()
                )));
            }
        }
        let a = Matrix::from_rows(&self.a).map_err(|e| parse_err("A", e))?;
        let raw = PolytopeProblem::new(a, self.b).map_err(|e| parse_err("A", e))?;

        let standard = if self.mean.is_some() || self.covariance.is_some() {
            let mean = self.mean.unwrap_or_else(|| vec![0.0; cols]);
            if mean.len() != cols {
                return Err(CliError::Parse(format!(
                    "mean: has {} entries, A has {cols} columns",
                    mean.len()
                )));
            }
            let cov = match self.covariance {
                Some(rows) => {
                    if rows.len() != cols || rows.iter().any(|r| r.len() != cols) {
                        return Err(CliError::Parse(format!(
                            "covariance: must be {cols} x {cols}"
                        )));
                    }
                    Matrix::from_rows(&rows).map_err(|e| parse_err("covariance", e))?
                }
                None => Matrix::identity(cols),
            };
            let g = GaussianSpec::new(mean, cov).map_err(|e| parse_err("covariance", e))?;
            whiten(&g, &raw).map_err(|e| parse_err("covariance", e))?
        } else {
            raw
        };
        let normalized = normalize_last_column(&standard).map_err(|e| parse_err("A", e))?;
        Ok(Loaded {
            standard,
            normalized,
        })
    }
}

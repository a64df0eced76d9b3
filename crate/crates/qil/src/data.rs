//! Data containers and CSV ingestion.
//!
//! Univariate observations live in a [`Dataset`], optionally partitioned into
//! K groups for composite likelihoods. Values are sorted ascending within
//! each group at construction. Multivariate, network, and choice-count data
//! have their own readers.

use std::path::Path;

use crate::error::{QilError, Result};

/// Univariate observations, sorted ascending within each group.
#[derive(Debug, Clone)]
pub struct Dataset {
    groups: Vec<Vec<f64>>,
    pooled: Vec<f64>,
}

impl Dataset {
    pub fn from_values(mut values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(QilError::EmptyData);
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(QilError::NumericalError("non-finite observation".into()));
        }
        values.sort_by(|a, b| a.partial_cmp(b).unwrap());
        Ok(Self {
            pooled: values.clone(),
            groups: vec![values],
        })
    }

    pub fn from_groups(mut groups: Vec<Vec<f64>>) -> Result<Self> {
        groups.retain(|g| !g.is_empty());
        if groups.is_empty() || groups.iter().all(|g| g.is_empty()) {
            return Err(QilError::EmptyData);
        }
        let mut pooled = Vec::with_capacity(groups.iter().map(Vec::len).sum());
        for g in &mut groups {
            if g.iter().any(|v| !v.is_finite()) {
                return Err(QilError::NumericalError("non-finite observation".into()));
            }
            g.sort_by(|a, b| a.partial_cmp(b).unwrap());
            pooled.extend_from_slice(g);
        }
        pooled.sort_by(|a, b| a.partial_cmp(b).unwrap());
        Ok(Self { groups, pooled })
    }

    /// Observations with integer group labels; labels partition the data.
    pub fn from_labeled(values: Vec<f64>, labels: Vec<i64>) -> Result<Self> {
        if values.len() != labels.len() {
            return Err(QilError::Parse("group column length mismatch".into()));
        }
        let mut keys: Vec<i64> = labels.clone();
        keys.sort_unstable();
        keys.dedup();
        let groups = keys
            .iter()
            .map(|k| {
                values
                    .iter()
                    .zip(&labels)
                    .filter(|(_, l)| *l == k)
                    .map(|(v, _)| *v)
                    .collect()
            })
            .collect();
        Self::from_groups(groups)
    }

    pub fn n(&self) -> usize {
        self.pooled.len()
    }

    pub fn k_groups(&self) -> usize {
        self.groups.len()
    }

    /// All observations pooled and sorted ascending.
    pub fn sorted(&self) -> &[f64] {
        &self.pooled
    }

    pub fn group(&self, k: usize) -> &[f64] {
        &self.groups[k]
    }

    /// Dataset view of a single group.
    pub fn group_dataset(&self, k: usize) -> Dataset {
        Dataset {
            pooled: self.groups[k].clone(),
            groups: vec![self.groups[k].clone()],
        }
    }

    pub fn mean(&self) -> f64 {
        self.pooled.iter().sum::<f64>() / self.n() as f64
    }

    /// Sample variance with n-1 denominator (0 for a single observation).
    pub fn variance(&self) -> f64 {
        let n = self.n();
        if n < 2 {
            return 0.0;
        }
        let m = self.mean();
        self.pooled.iter().map(|y| (y - m).powi(2)).sum::<f64>() / (n - 1) as f64
    }
}

fn split_header(line: &str) -> Vec<String> {
    line.split(',').map(|s| s.trim().to_lowercase()).collect()
}

fn parse_f64(field: &str, line_no: usize) -> Result<f64> {
    field
        .trim()
        .parse::<f64>()
        .map_err(|_| QilError::Parse(format!("line {line_no}: bad real `{field}`")))
}

/// Read a univariate CSV with a required header. The value column is named
/// `value` (or is the single column); an optional `group` column carries
/// integer group labels.
pub fn read_univariate_csv(path: &Path) -> Result<Dataset> {
    let text = std::fs::read_to_string(path)?;
    let mut lines = text.lines().enumerate();
    let (_, header) = lines.next().ok_or(QilError::EmptyData)?;
    let cols = split_header(header);
    let value_idx = cols
        .iter()
        .position(|c| c == "value")
        .or(if cols.len() == 1 { Some(0) } else { None })
        .ok_or_else(|| QilError::Parse("no `value` column in header".into()))?;
    let group_idx = cols.iter().position(|c| c == "group");

    let mut values = Vec::new();
    let mut labels = Vec::new();
    for (no, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        values.push(parse_f64(fields[value_idx], no + 1)?);
        if let Some(g) = group_idx {
            let lbl = fields[g]
                .trim()
                .parse::<i64>()
                .map_err(|_| QilError::Parse(format!("line {}: bad group label", no + 1)))?;
            labels.push(lbl);
        }
    }
    if group_idx.is_some() {
        Dataset::from_labeled(values, labels)
    } else {
        Dataset::from_values(values)
    }
}

/// Read a numeric matrix CSV (header required, one observation per row).
pub fn read_matrix_csv(path: &Path) -> Result<Vec<Vec<f64>>> {
    let text = std::fs::read_to_string(path)?;
    let mut lines = text.lines().enumerate();
    let (_, header) = lines.next().ok_or(QilError::EmptyData)?;
    let p = split_header(header).len();
    let mut rows = Vec::new();
    for (no, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let row: Vec<f64> = line
            .split(',')
            .map(|f| parse_f64(f, no + 1))
            .collect::<Result<_>>()?;
        if row.len() != p {
            return Err(QilError::Parse(format!(
                "line {}: expected {p} columns, found {}",
                no + 1,
                row.len()
            )));
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(QilError::EmptyData);
    }
    Ok(rows)
}

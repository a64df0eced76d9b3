//! Serializable report artifacts and small CSV writers. Reports are
//! deterministic for a fixed config and seed; wall-clock fields are opt-in
//! via the `timing` flag so rerunning a config reproduces artifacts
//! byte-for-byte.

use std::io::Write;
use std::path::Path;

use qil::inference::ParamSummary;
use serde::Serialize;

#[derive(Debug, Serialize)]
pub struct FitReport {
    pub model: String,
    pub algorithm: String,
    pub seed: u64,
    /// Quantile count per data group.
    pub d: Vec<usize>,
    /// Achieved Kolmogorov gap per data group.
    pub kolmogorov_gap: Vec<f64>,
    pub parameters: Vec<String>,
    pub theta_hat: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub covariance: Option<Vec<Vec<f64>>>,
    pub objective: f64,
    pub converged: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub elapsed_seconds: Option<f64>,
}

#[derive(Debug, Serialize)]
pub struct SampleReport {
    pub model: String,
    pub algorithm: String,
    pub seed: u64,
    pub iterations: usize,
    pub burn_in: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub acceptance: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ess: Option<f64>,
    pub parameters: Vec<ParamSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub elapsed_seconds: Option<f64>,
}

#[derive(Debug, Serialize)]
pub struct SelectReport {
    pub n: usize,
    pub d: usize,
    pub kolmogorov_gap: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambdas: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub qhat: Option<Vec<f64>>,
    /// Selected row indices for multivariate data (0-based).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub indices: Option<Vec<usize>>,
}

#[derive(Debug, Clone, Serialize)]
pub struct BenchRow {
    pub model: String,
    pub algorithm: String,
    pub n: usize,
    pub p0: usize,
    pub epsilon: f64,
    pub d_median: usize,
    pub replications: usize,
    pub failures: usize,
    /// RMSE over Monte Carlo draws (or point estimates), per the study
    /// definition.
    pub rmse: f64,
    /// RMSE of the point estimate (posterior mean for samplers).
    pub rmse_point: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rmse_mle: Option<f64>,
    /// Largest absolute deviation of the estimate from the exact-likelihood
    /// estimate across parameters and replications.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_dev_from_mle: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ess_mean: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rmse_zero_corr: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rmse_nonzero_corr: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rmse_diagonal: Option<f64>,
}

#[derive(Debug, Serialize)]
pub struct BenchReport {
    pub seed: u64,
    pub rows: Vec<BenchRow>,
}

/// Raw per-replication record for the bench CSV.
#[derive(Debug, Clone)]
pub struct BenchRecord {
    pub model: String,
    pub estimator: String,
    pub n: usize,
    pub epsilon: f64,
    pub replication: usize,
    pub parameter: String,
    pub truth: f64,
    pub estimate: f64,
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> std::io::Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir)?;
    }
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text)
}

pub fn write_bench_raw(path: &Path, records: &[BenchRecord]) -> std::io::Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir)?;
    }
    let mut f = std::fs::File::create(path)?;
    writeln!(f, "model,estimator,n,epsilon,replication,parameter,truth,estimate")?;
    for r in records {
        writeln!(
            f,
            "{},{},{},{},{},{},{},{}",
            r.model, r.estimator, r.n, r.epsilon, r.replication, r.parameter, r.truth, r.estimate
        )?;
    }
    Ok(())
}

pub fn write_timing_csv(path: &Path, rows: &[(String, f64)]) -> std::io::Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir)?;
    }
    let mut f = std::fs::File::create(path)?;
    writeln!(f, "label,elapsed_seconds")?;
    for (label, secs) in rows {
        writeln!(f, "{label},{secs:.6}")?;
    }
    Ok(())
}

/// Trace CSV: one draw per row.
pub fn write_trace_csv(
    path: &Path,
    names: &[String],
    samples: &[Vec<f64>],
) -> std::io::Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir)?;
    }
    let mut f = std::fs::File::create(path)?;
    writeln!(f, "{}", names.join(","))?;
    for s in samples {
        let line: Vec<String> = s.iter().map(|v| format!("{v}")).collect();
        writeln!(f, "{}", line.join(","))?;
    }
    Ok(())
}

/// Univariate data CSV with a `value` header.
pub fn write_values_csv(path: &Path, values: &[f64]) -> std::io::Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir)?;
    }
    let mut f = std::fs::File::create(path)?;
    writeln!(f, "value")?;
    for v in values {
        writeln!(f, "{v}")?;
    }
    Ok(())
}

/// Matrix CSV with generated column names.
pub fn write_matrix_csv(path: &Path, header: &[String], rows: &[Vec<f64>]) -> std::io::Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir)?;
    }
    let mut f = std::fs::File::create(path)?;
    writeln!(f, "{}", header.join(","))?;
    for r in rows {
        let line: Vec<String> = r.iter().map(|v| format!("{v}")).collect();
        writeln!(f, "{}", line.join(","))?;
    }
    Ok(())
}

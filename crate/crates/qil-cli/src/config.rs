//! The versioned JSON configuration consumed by every subcommand.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

pub const CONFIG_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CommandKind {
    Fit,
    Sample,
    Simulate,
    Select,
    Bench,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    Pls,
    Plm,
    Am,
    Vis,
    Metropolis,
    Abc,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DataKind {
    /// One observation per row, optional `group` column.
    Univariate,
    /// p numeric columns, one observation per row.
    Matrix,
    /// Binary response in column `y` followed by covariate columns.
    Regression,
    /// 1-based edge list `i,j`.
    Network,
    /// One person per row, c integer count columns.
    Choice,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelConfig {
    pub name: String,
    /// Network covariate set: "linear" (default) or "quadratic".
    #[serde(default)]
    pub stats: Option<String>,
    /// Regression prior: "lasso" (default) or "vague".
    #[serde(default)]
    pub prior: Option<String>,
    /// Initial shrinkage rate for the lasso prior.
    #[serde(default)]
    pub lambda: Option<f64>,
    /// Regression design keeps a free (unshrunk) intercept column.
    #[serde(default)]
    pub free_intercept: Option<bool>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DataConfig {
    pub path: PathBuf,
    pub kind: DataKind,
    /// Actor count override for network data.
    #[serde(default)]
    pub n_actors: Option<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StudyConfig {
    /// Model names; the single entry "basic19" expands to the full catalog.
    pub models: Vec<String>,
    pub n: Vec<usize>,
    pub epsilon: Vec<f64>,
    pub replications: usize,
    pub algorithm: Algorithm,
    /// Also run the exact-likelihood estimator for comparison.
    #[serde(default = "default_true")]
    pub with_mle: bool,
    /// Iterations for sampling algorithms inside the study.
    #[serde(default)]
    pub iterations: Option<usize>,
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunConfig {
    pub version: u32,
    pub command: CommandKind,
    #[serde(default)]
    pub model: Option<ModelConfig>,
    #[serde(default)]
    pub data: Option<DataConfig>,
    #[serde(default)]
    pub algorithm: Option<Algorithm>,
    #[serde(default)]
    pub epsilon: Option<f64>,
    #[serde(default)]
    pub iterations: Option<usize>,
    #[serde(default)]
    pub burn_in: Option<f64>,
    /// Draws kept by the rejection sampler.
    #[serde(default)]
    pub keep: Option<usize>,
    /// Rejection-sampler summaries: "octiles" or "all".
    #[serde(default)]
    pub summaries: Option<String>,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub trace: bool,
    /// Include wall-clock timing in the report (breaks byte-identical
    /// reruns, hence opt-in).
    #[serde(default)]
    pub timing: bool,
    #[serde(default)]
    pub study: Option<StudyConfig>,
    /// Simulation designs for the `simulate` command.
    #[serde(default)]
    pub designs: Option<Vec<String>>,
    /// Sample size for simulation designs.
    #[serde(default)]
    pub n: Option<usize>,
}

impl RunConfig {
    pub fn load(path: &std::path::Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| format!("cannot read config {}: {e}", path.display()))?;
        let cfg: RunConfig =
            serde_json::from_str(&text).map_err(|e| format!("config parse error: {e}"))?;
        if cfg.version != CONFIG_VERSION {
            return Err(format!(
                "unsupported config version {} (expected {CONFIG_VERSION})",
                cfg.version
            ));
        }
        Ok(cfg)
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(0)
    }

    pub fn epsilon_or_default(&self) -> f64 {
        self.epsilon.unwrap_or(0.01)
    }

    pub fn out_dir(&self) -> PathBuf {
        self.out.clone().unwrap_or_else(|| PathBuf::from("."))
    }
}

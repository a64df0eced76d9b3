//! Command implementations behind the CLI: config-driven fits, posterior
//! sampling, data simulation, quantile/row selection, and benchmark
//! studies.

use std::path::PathBuf;
use std::time::Instant;

use qil::data::{read_matrix_csv, read_univariate_csv, Dataset};
use qil::depth::{self, PrecisionMatrix};
use qil::glm::{self, LassoPrior, RegressionData};
use qil::inference::{self, AbcSummaries, Objective, PosteriorDraws};
use qil::linalg::Matrix;
use qil::model::{basic_models, model_by_name, GqKind, GqModel, Model};
use qil::network::{erg_change_statistics, ErgStat, NetworkGraph};
use qil::pivotal::{self, DPolicy};
use qil::quantiles;
use qil::wallenius::{self, ChoiceWeights, WalleniusQil};
use qil::{QilError, Rng};

use crate::config::{Algorithm, CommandKind, DataConfig, DataKind, RunConfig};
use crate::designs;
use crate::report::{
    write_bench_raw, write_json, write_matrix_csv, write_timing_csv, write_trace_csv,
    write_values_csv, BenchRecord, BenchReport, BenchRow, FitReport, SampleReport, SelectReport,
};

#[derive(Debug)]
pub enum CliError {
    /// Configuration or input-schema problem; exit code 2.
    Config(String),
    /// Optimizer gave up; exit code 3 (best iterate already in the report).
    NoConvergence(String),
    /// Anything else; exit code 1.
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::NoConvergence(_) => 3,
            CliError::Runtime(_) => 1,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            CliError::Config(m) | CliError::NoConvergence(m) | CliError::Runtime(m) => m,
        }
    }
}

impl From<QilError> for CliError {
    fn from(e: QilError) -> Self {
        match e {
            QilError::NoConvergence { ref message, .. } => {
                CliError::NoConvergence(format!("no convergence: {message}"))
            }
            QilError::Io(ref io) => CliError::Config(format!("io error: {io}")),
            QilError::Parse(ref m) => CliError::Config(format!("parse error: {m}")),
            QilError::UnknownModel(ref m) => CliError::Config(format!("unknown model `{m}`")),
            other => CliError::Runtime(other.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Runtime(format!("io error: {e}"))
    }
}

pub fn run(cfg: &RunConfig) -> Result<(), CliError> {
    match cfg.command {
        CommandKind::Fit => run_fit(cfg).map(|_| ()),
        CommandKind::Sample => run_sample(cfg).map(|_| ()),
        CommandKind::Simulate => run_simulate(cfg).map(|_| ()),
        CommandKind::Select => run_select(cfg).map(|_| ()),
        CommandKind::Bench => run_bench(cfg).map(|_| ()),
    }
}

fn need_model(cfg: &RunConfig) -> Result<&crate::config::ModelConfig, CliError> {
    cfg.model
        .as_ref()
        .ok_or_else(|| CliError::Config("missing `model` section".into()))
}

fn need_data(cfg: &RunConfig) -> Result<&DataConfig, CliError> {
    let d = cfg
        .data
        .as_ref()
        .ok_or_else(|| CliError::Config("missing `data` section".into()))?;
    if !d.path.exists() {
        return Err(CliError::Config(format!(
            "data file {} does not exist",
            d.path.display()
        )));
    }
    Ok(d)
}

fn load_regression(data: &DataConfig) -> Result<RegressionData, CliError> {
    let rows = read_matrix_csv(&data.path)?;
    let y: Vec<f64> = rows.iter().map(|r| r[0]).collect();
    let x: Vec<Vec<f64>> = rows.into_iter().map(|r| r[1..].to_vec()).collect();
    let data = RegressionData { x, y };
    data.validate()?;
    Ok(data)
}

fn erg_stats(model: &crate::config::ModelConfig) -> Result<Vec<ErgStat>, CliError> {
    match model.stats.as_deref().unwrap_or("linear") {
        "linear" => Ok(ErgStat::linear()),
        "quadratic" => Ok(ErgStat::quadratic()),
        other => Err(CliError::Config(format!("unknown stats set `{other}`"))),
    }
}

fn univariate_starts(model: &dyn Model, data: &Dataset) -> Vec<Vec<f64>> {
    let mut starts = Vec::new();
    if let Some(mle) = model.mle(data) {
        starts.push(mle);
    }
    match model.name() {
        "g_and_h" => starts.extend(GqModel::new(GqKind::H).starts(data)),
        "g_and_k" => starts.extend(GqModel::new(GqKind::K).starts(data)),
        _ => {}
    }
    starts.push(
        model
            .bounds()
            .iter()
            .map(|(lo, hi)| 0.5 * (lo + hi.min(10.0)))
            .collect(),
    );
    starts
}

/// Fit a model by penalized least squares or penalized maximization and
/// write the JSON report.
pub fn run_fit(cfg: &RunConfig) -> Result<FitReport, CliError> {
    let timer = Instant::now();
    let model_cfg = need_model(cfg)?;
    let data_cfg = need_data(cfg)?;
    let algorithm = cfg.algorithm.unwrap_or(Algorithm::Pls);

    let report = match model_cfg.name.as_str() {
        "logit_lasso" | "erg_logit" => fit_regression(cfg, model_cfg, data_cfg, algorithm)?,
        name => {
            let model = model_by_name(name)
                .ok_or_else(|| CliError::Config(format!("unknown model `{name}`")))?;
            let data = read_univariate_csv(&data_cfg.path)?;
            let preps = pivotal::prepare_groups(&data, DPolicy::Epsilon(cfg.epsilon_or_default()))?;
            let obj = Objective::univariate(model.as_ref(), &preps);
            let starts = univariate_starts(model.as_ref(), &data);
            let est = match algorithm {
                Algorithm::Pls => inference::pls_estimate(&obj, &starts)?,
                Algorithm::Plm => inference::plm_estimate(&obj, &starts)?,
                other => {
                    return Err(CliError::Config(format!(
                        "fit expects pls or plm, got {other:?}"
                    )))
                }
            };
            FitReport {
                model: name.to_string(),
                algorithm: format!("{algorithm:?}").to_lowercase(),
                seed: cfg.seed(),
                d: preps.iter().map(|p| p.grid.d()).collect(),
                kolmogorov_gap: preps.iter().map(|p| p.gap).collect(),
                parameters: model.param_names(),
                theta_hat: est.theta,
                covariance: est.covariance.map(matrix_rows),
                objective: est.objective,
                converged: est.converged,
                lambda: None,
                elapsed_seconds: None,
            }
        }
    };

    let mut report = report;
    if cfg.timing {
        report.elapsed_seconds = Some(timer.elapsed().as_secs_f64());
    }
    write_json(&cfg.out_dir().join("fit_report.json"), &report)?;
    Ok(report)
}

fn fit_regression(
    cfg: &RunConfig,
    model_cfg: &crate::config::ModelConfig,
    data_cfg: &DataConfig,
    algorithm: Algorithm,
) -> Result<FitReport, CliError> {
    let data = match (model_cfg.name.as_str(), data_cfg.kind) {
        ("erg_logit", DataKind::Network) => {
            let graph = NetworkGraph::from_edge_csv(&data_cfg.path, data_cfg.n_actors)?;
            erg_change_statistics(&graph, &erg_stats(model_cfg)?)?
        }
        ("logit_lasso", DataKind::Regression) => load_regression(data_cfg)?,
        (name, kind) => {
            return Err(CliError::Config(format!(
                "model `{name}` cannot read {kind:?} data"
            )))
        }
    };
    let p = data.p();
    let prior_kind = model_cfg.prior.as_deref().unwrap_or("lasso");
    let (theta, covariance, lambda, objective, converged) = match (prior_kind, algorithm) {
        ("lasso", Algorithm::Plm) | ("lasso", Algorithm::Pls) => {
            let lambda = model_cfg.lambda.unwrap_or(0.5);
            let prior = if model_cfg.free_intercept.unwrap_or(false) {
                LassoPrior::with_free_intercept(p, lambda)
            } else {
                LassoPrior::all_shrunk(p, lambda)
            };
            let map = glm::binreg_map(&data, &prior)?;
            (
                map.beta,
                map.covariance,
                Some(map.lambda),
                map.objective,
                true,
            )
        }
        ("vague", Algorithm::Plm) => {
            let est = logit_vague_plm(&data, None)?;
            (est.theta, est.covariance, None, est.objective, est.converged)
        }
        (p, a) => {
            return Err(CliError::Config(format!(
                "unsupported prior/algorithm combination {p}/{a:?}"
            )))
        }
    };
    Ok(FitReport {
        model: model_cfg.name.clone(),
        algorithm: format!("{algorithm:?}").to_lowercase(),
        seed: cfg.seed(),
        d: vec![1],
        kolmogorov_gap: vec![],
        parameters: (1..=p).map(|j| format!("beta{j}")).collect(),
        theta_hat: theta,
        covariance: covariance.map(matrix_rows),
        objective,
        converged,
        lambda,
        elapsed_seconds: None,
    })
}

/// Penalized maximization of the regression surrogate under a vague normal
/// prior on the non-intercept coefficients.
pub fn logit_vague_plm(
    data: &RegressionData,
    budget: Option<usize>,
) -> Result<inference::Estimate, CliError> {
    let p = data.p();
    let obj = Objective::new(
        vec![-50.0; p],
        vec![50.0; p],
        |beta: &[f64]| {
            glm::binreg_log_qil(data, beta)
                - beta.iter().skip(1).map(|b| b * b).sum::<f64>() / (2.0 * 1e8)
        },
        |_| 0.0,
    );
    let mut starts = vec![vec![0.0; p]];
    if let Ok(ps) = glm::logistic_irls(data, 30) {
        starts.insert(0, ps);
    }
    let opts = match budget {
        Some(b) => qil::optim::NmOptions::with_budget(p, b),
        None => qil::optim::NmOptions::for_dim(p),
    };
    Ok(inference::plm_estimate_opts(&obj, &starts, &opts)?)
}

fn matrix_rows(m: Matrix) -> Vec<Vec<f64>> {
    (0..m.n)
        .map(|i| (0..m.n).map(|j| m[(i, j)]).collect())
        .collect()
}

/// Posterior sampling for any supported model/algorithm pair.
pub fn run_sample(cfg: &RunConfig) -> Result<SampleReport, CliError> {
    let timer = Instant::now();
    let model_cfg = need_model(cfg)?;
    let algorithm = cfg
        .algorithm
        .ok_or_else(|| CliError::Config("sample requires `algorithm`".into()))?;
    let iterations = cfg.iterations.unwrap_or(10_000);
    let burn_in = cfg.burn_in.unwrap_or(0.5);
    let seed = cfg.seed();

    let (draws, names) = match (model_cfg.name.as_str(), algorithm) {
        ("skew_normal_precision", Algorithm::Vis) => {
            let data_cfg = need_data(cfg)?;
            let rows = read_matrix_csv(&data_cfg.path)?;
            let rows = quantiles::standardize(&rows)?;
            sample_precision_vis(&rows, iterations, seed)?
        }
        ("wallenius", Algorithm::Am) => {
            let data_cfg = need_data(cfg)?;
            let rows = read_matrix_csv(&data_cfg.path)?;
            let m = infer_category_sizes(&rows);
            wallenius_am(rows, &m, iterations, burn_in, seed)?
        }
        ("wallenius_hierarchical", Algorithm::Metropolis) => {
            let data_cfg = need_data(cfg)?;
            let rows = read_matrix_csv(&data_cfg.path)?;
            let m = infer_category_sizes(&rows);
            let draws =
                wallenius::hierarchical_metropolis(&rows, &m, iterations, burn_in, 0.176, seed)?;
            let mut names = Vec::new();
            for i in 0..rows.len() {
                for j in 0..m.len() {
                    names.push(format!("person{}_theta{}", i + 1, j + 1));
                }
            }
            (draws, names)
        }
        ("logit_lasso", Algorithm::Am) | ("erg_logit", Algorithm::Am) => {
            let data_cfg = need_data(cfg)?;
            let data = match model_cfg.name.as_str() {
                "erg_logit" => {
                    let graph = NetworkGraph::from_edge_csv(&data_cfg.path, data_cfg.n_actors)?;
                    erg_change_statistics(&graph, &erg_stats(model_cfg)?)?
                }
                _ => load_regression(data_cfg)?,
            };
            let p = data.p();
            let lambda = model_cfg.lambda.unwrap_or(0.5);
            let prior = if model_cfg.free_intercept.unwrap_or(false) {
                LassoPrior::with_free_intercept(p, lambda)
            } else {
                LassoPrior::all_shrunk(p, lambda)
            };
            let start = glm::logistic_irls(&data, 30).unwrap_or_else(|_| vec![0.0; p]);
            let draws = glm::binreg_lasso_am(&data, &prior, &start, iterations, burn_in, seed)?;
            let mut names: Vec<String> = (1..=p).map(|j| format!("beta{j}")).collect();
            names.push("lambda".into());
            (draws, names)
        }
        (name, Algorithm::Am) => {
            let model = model_by_name(name)
                .ok_or_else(|| CliError::Config(format!("unknown model `{name}`")))?;
            let data_cfg = need_data(cfg)?;
            let data = read_univariate_csv(&data_cfg.path)?;
            let preps = pivotal::prepare_groups(&data, DPolicy::Epsilon(cfg.epsilon_or_default()))?;
            let obj = Objective::univariate(model.as_ref(), &preps);
            let starts = univariate_starts(model.as_ref(), &data);
            let start = inference::plm_estimate(&obj, &starts)?.theta;
            let draws = inference::adaptive_metropolis(&obj, &start, iterations, burn_in, seed)?;
            (draws, model.param_names())
        }
        (name, Algorithm::Abc) => {
            let model = model_by_name(name)
                .ok_or_else(|| CliError::Config(format!("unknown model `{name}`")))?;
            let data_cfg = need_data(cfg)?;
            let data = read_univariate_csv(&data_cfg.path)?;
            let summaries = match cfg.summaries.as_deref().unwrap_or("octiles") {
                "octiles" => AbcSummaries::Octiles,
                "all" => AbcSummaries::AllOrderStats,
                other => {
                    return Err(CliError::Config(format!("unknown summaries `{other}`")))
                }
            };
            let keep = cfg.keep.unwrap_or(1000);
            let draws =
                inference::abc_rejection(model.as_ref(), &data, summaries, iterations, keep, seed)?;
            (draws, model.param_names())
        }
        (name, alg) => {
            return Err(CliError::Config(format!(
                "model `{name}` does not support algorithm {alg:?}"
            )))
        }
    };

    let parameters = inference::summarize(&draws, &names);
    let report = SampleReport {
        model: model_cfg.name.clone(),
        algorithm: format!("{algorithm:?}").to_lowercase(),
        seed,
        iterations,
        burn_in,
        acceptance: draws.acceptance_rate,
        ess: draws.ess,
        parameters,
        elapsed_seconds: cfg.timing.then(|| timer.elapsed().as_secs_f64()),
    };
    write_json(&cfg.out_dir().join("sample_report.json"), &report)?;
    if cfg.trace {
        write_trace_csv(&cfg.out_dir().join("trace.csv"), &names, &draws.samples)?;
    }
    Ok(report)
}

/// Importance sampling for the precision matrix under the Wishart prior;
/// returns draws of the partial-correlation and partial-variance
/// functionals.
pub fn sample_precision_vis(
    rows: &[Vec<f64>],
    iterations: usize,
    seed: u64,
) -> Result<(PosteriorDraws, Vec<String>), CliError> {
    let p = rows.first().map_or(0, Vec::len);
    if p == 0 {
        return Err(CliError::Config("empty data matrix".into()));
    }
    let scale = Matrix::scaled_identity(p, 1.0 / (p as f64 - 1.0));
    let draws = inference::vanilla_importance(
        |lower: &[f64]| match PrecisionMatrix::from_lower_vec(p, lower) {
            Ok(prec) => depth::log_qil_multivariate(rows, &prec, DPolicy::All)
                .map(|r| r.log_qil)
                .unwrap_or(f64::NEG_INFINITY),
            Err(_) => f64::NEG_INFINITY,
        },
        |rng: &mut Rng| {
            depth::sample_wishart(&scale, p - 1, rng)
                .expect("identity scale is positive definite")
                .to_lower_vec()
        },
        iterations,
        seed,
    )?;

    // functional draws: partial correlations then partial variances
    let mut names = Vec::new();
    for i in 0..p {
        for j in (i + 1)..p {
            names.push(format!("pcor_{}_{}", i + 1, j + 1));
        }
    }
    for j in 0..p {
        names.push(format!("pvar_{}", j + 1));
    }
    let samples: Vec<Vec<f64>> = draws
        .samples
        .iter()
        .map(|lower| {
            let prec = PrecisionMatrix::from_lower_vec(p, lower).unwrap();
            let mut row = Vec::with_capacity(names.len());
            for i in 0..p {
                for j in (i + 1)..p {
                    row.push(prec.partial_correlation(i, j));
                }
            }
            for j in 0..p {
                row.push(prec.partial_variance(j));
            }
            row
        })
        .collect();
    Ok((
        PosteriorDraws {
            samples,
            weights: draws.weights,
            acceptance_rate: None,
            ess: draws.ess,
            seed,
            elapsed: draws.elapsed,
        },
        names,
    ))
}

/// Adaptive Metropolis for shared choice weights on the log-ratio scale;
/// draws are returned on the weight scale.
pub fn wallenius_am(
    rows: Vec<Vec<f64>>,
    m: &[usize],
    iterations: usize,
    burn_in: f64,
    seed: u64,
) -> Result<(PosteriorDraws, Vec<String>), CliError> {
    let c = m.len();
    let qil = WalleniusQil::new(rows, m)?;
    let obj = Objective::new(
        vec![-20.0; c - 1],
        vec![20.0; c - 1],
        |eta: &[f64]| qil.eta_log_target(eta),
        |_| 0.0,
    );
    let eta0 = vec![0.0; c - 1];
    let draws = inference::adaptive_metropolis(&obj, &eta0, iterations, burn_in, seed)?;
    let samples: Vec<Vec<f64>> = draws
        .samples
        .iter()
        .map(|eta| ChoiceWeights::from_log_ratios(eta).as_slice().to_vec())
        .collect();
    let names = (1..=c).map(|j| format!("theta{j}")).collect();
    Ok((
        PosteriorDraws {
            samples,
            weights: None,
            acceptance_rate: draws.acceptance_rate,
            ess: None,
            seed,
            elapsed: draws.elapsed,
        },
        names,
    ))
}

fn infer_category_sizes(rows: &[Vec<f64>]) -> Vec<usize> {
    // category sizes from the data maxima; the bundled activities design
    // when the shape matches
    let (_, act_m) = wallenius::activities_data();
    let c = rows.first().map_or(0, Vec::len);
    if c == act_m.len() {
        let fits = rows
            .iter()
            .all(|r| r.iter().zip(&act_m).all(|(v, &mj)| *v <= mj as f64));
        if fits {
            return act_m;
        }
    }
    (0..c)
        .map(|j| {
            rows.iter()
                .map(|r| r[j] as usize)
                .max()
                .unwrap_or(1)
                .max(1)
        })
        .collect()
}

/// Write simulated data sets for the study designs.
pub fn run_simulate(cfg: &RunConfig) -> Result<Vec<PathBuf>, CliError> {
    let out = cfg.out_dir();
    let seed = cfg.seed();
    let designs: Vec<String> = cfg.designs.clone().unwrap_or_else(|| {
        vec![
            "basic19".into(),
            "g_and_h".into(),
            "g_and_k".into(),
            "logit8".into(),
            "skew_normal".into(),
            "wallenius".into(),
        ]
    });
    let mut written = Vec::new();
    let mut manifest: Vec<serde_json::Value> = Vec::new();
    for design in &designs {
        match design.as_str() {
            "basic19" => {
                let n = cfg.n.unwrap_or(20_000);
                for (k, model) in basic_models().into_iter().enumerate() {
                    let mut rng = Rng::stream(seed, 100 + k as u64);
                    let values = model.simulate(&model.truth(), n, &mut rng);
                    let path = out.join(format!("{}.csv", model.name()));
                    write_values_csv(&path, &values)?;
                    manifest.push(serde_json::json!({
                        "design": model.name(), "path": path, "n": n,
                        "truth": model.truth(), "seed": seed,
                    }));
                    written.push(path);
                }
            }
            "g_and_h" | "g_and_k" => {
                let n = cfg.n.unwrap_or(20_000);
                let model = model_by_name(design).unwrap();
                let mut rng = Rng::stream(seed, if design == "g_and_h" { 200 } else { 201 });
                let values = model.simulate(&model.truth(), n, &mut rng);
                let path = out.join(format!("{design}.csv"));
                write_values_csv(&path, &values)?;
                manifest.push(serde_json::json!({
                    "design": design, "path": path, "n": n,
                    "truth": model.truth(), "seed": seed,
                }));
                written.push(path);
            }
            name if name.starts_with("logit") => {
                let p0: usize = name[5..]
                    .parse()
                    .map_err(|_| CliError::Config(format!("bad design `{name}`")))?;
                let n = cfg.n.unwrap_or(30_000);
                let (data, beta) = designs::simulate_logit(n, p0, seed ^ 0x10617);
                let path = out.join(format!("{name}.csv"));
                let mut header = vec!["y".to_string()];
                header.extend((1..=data.p()).map(|j| format!("x{j}")));
                let rows: Vec<Vec<f64>> = data
                    .x
                    .iter()
                    .zip(&data.y)
                    .map(|(x, y)| {
                        let mut r = vec![*y];
                        r.extend_from_slice(x);
                        r
                    })
                    .collect();
                write_matrix_csv(&path, &header, &rows)?;
                manifest.push(serde_json::json!({
                    "design": name, "path": path, "n": n, "p0": p0,
                    "truth": beta, "seed": seed,
                }));
                written.push(path);
            }
            "skew_normal" => {
                let n = cfg.n.unwrap_or(40);
                let (rows, sigma) = designs::simulate_sparse_normal(n, seed ^ 0x5EED);
                let path = out.join("skew_normal.csv");
                let header: Vec<String> = (1..=10).map(|j| format!("y{j}")).collect();
                write_matrix_csv(&path, &header, &rows)?;
                manifest.push(serde_json::json!({
                    "design": "skew_normal", "path": path, "n": n,
                    "sigma_true": matrix_rows(sigma), "seed": seed,
                }));
                written.push(path);
            }
            "wallenius" => {
                let (rows, m, theta) = designs::simulate_wallenius(seed ^ 0xA11);
                let path = out.join("wallenius.csv");
                let header: Vec<String> = (1..=m.len()).map(|j| format!("c{j}")).collect();
                write_matrix_csv(&path, &header, &rows)?;
                manifest.push(serde_json::json!({
                    "design": "wallenius", "path": path, "n": rows.len(),
                    "m": m, "truth": theta, "seed": seed,
                }));
                written.push(path);
            }
            other => return Err(CliError::Config(format!("unknown design `{other}`"))),
        }
    }
    write_json(&out.join("manifest.json"), &manifest)?;
    Ok(written)
}

/// Quantile-grid selection (univariate) or depth-based row selection
/// (multivariate).
pub fn run_select(cfg: &RunConfig) -> Result<SelectReport, CliError> {
    let data_cfg = need_data(cfg)?;
    let eps = cfg.epsilon_or_default();
    let report = match data_cfg.kind {
        DataKind::Univariate => {
            let data = read_univariate_csv(&data_cfg.path)?;
            let grid = quantiles::select_d(&data, eps)?;
            let gap = quantiles::achieved_gap(&data, &grid);
            SelectReport {
                n: data.n(),
                d: grid.d(),
                kolmogorov_gap: gap,
                lambdas: Some(grid.lambdas),
                qhat: Some(grid.qhat),
                indices: None,
            }
        }
        DataKind::Matrix | DataKind::Regression => {
            let rows = read_matrix_csv(&data_cfg.path)?;
            let idx = depth::depth_coreset(&rows, eps)?;
            let gap = coreset_gap(&rows, &idx)?;
            SelectReport {
                n: rows.len(),
                d: idx.len(),
                kolmogorov_gap: gap,
                lambdas: None,
                qhat: None,
                indices: Some(idx),
            }
        }
        other => {
            return Err(CliError::Config(format!(
                "select expects univariate or matrix data, got {other:?}"
            )))
        }
    };
    println!(
        "selected d = {} of n = {} (kolmogorov gap {:.6} <= {eps})",
        report.d, report.n, report.kolmogorov_gap
    );
    write_json(&cfg.out_dir().join("select_report.json"), &report)?;
    Ok(report)
}

fn coreset_gap(rows: &[Vec<f64>], idx: &[usize]) -> Result<f64, CliError> {
    if idx.len() == rows.len() {
        return Ok(0.0);
    }
    let (mu, sigma) = depth::robust_moments(rows)?;
    let inv = sigma
        .inverse_spd()
        .map_err(|_| CliError::Runtime("singular scatter".into()))?;
    let depths: Vec<f64> = rows
        .iter()
        .map(|y| depth::mahalanobis_depth(y, &mu, &inv).map(|(_, d)| d))
        .collect::<Result<_, _>>()?;
    let mut all = depths.clone();
    all.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut sel: Vec<f64> = idx.iter().map(|&i| depths[i]).collect();
    sel.sort_by(|a, b| a.partial_cmp(b).unwrap());
    Ok(quantiles::kolmogorov_gap(&all, &sel))
}

/// One benchmark condition outcome before aggregation.
struct RepOutcome {
    /// (parameter name, truth, point estimate)
    point: Vec<(String, f64, f64)>,
    /// posterior draws per parameter for the draw-based error, if any
    draws: Option<Vec<Vec<f64>>>,
    d: usize,
    elapsed: f64,
    mle: Option<Vec<f64>>,
    ess: Option<f64>,
}

/// Run a study over models x n x epsilon and write the aggregate table,
/// raw estimates, and timings.
pub fn run_bench(cfg: &RunConfig) -> Result<BenchReport, CliError> {
    let study = cfg
        .study
        .as_ref()
        .ok_or_else(|| CliError::Config("bench requires a `study` section".into()))?;
    let seed = cfg.seed();
    let out = cfg.out_dir();
    if study.replications == 0 {
        eprintln!("warning: zero replications requested; writing an empty report");
        let report = BenchReport { seed, rows: vec![] };
        write_json(&out.join("bench_table.json"), &report)?;
        return Ok(report);
    }

    let mut model_names = Vec::new();
    for m in &study.models {
        if m == "basic19" {
            model_names.extend(basic_models().iter().map(|b| b.name().to_string()));
        } else {
            model_names.push(m.clone());
        }
    }

    let mut rows = Vec::new();
    let mut records = Vec::new();
    let mut timings = Vec::new();
    let mut stream = 0u64;
    for name in &model_names {
        for &n in &study.n {
            for &eps in &study.epsilon {
                let mut outcomes = Vec::new();
                let mut failures = 0usize;
                for rep in 0..study.replications {
                    stream += 1;
                    let rep_seed = seed.wrapping_add(stream.wrapping_mul(0x9E3779B97F4A7C15));
                    match bench_one(name, n, eps, study, rep_seed) {
                        Ok(o) => {
                            let alg = format!("{:?}", study.algorithm).to_lowercase();
                            for (j, (pname, truth, est)) in o.point.iter().enumerate() {
                                records.push(BenchRecord {
                                    model: name.clone(),
                                    estimator: alg.clone(),
                                    n,
                                    epsilon: eps,
                                    replication: rep,
                                    parameter: pname.clone(),
                                    truth: *truth,
                                    estimate: *est,
                                });
                                if let Some(mle) = &o.mle {
                                    records.push(BenchRecord {
                                        model: name.clone(),
                                        estimator: "mle".into(),
                                        n,
                                        epsilon: eps,
                                        replication: rep,
                                        parameter: pname.clone(),
                                        truth: *truth,
                                        estimate: mle[j],
                                    });
                                }
                            }
                            timings.push((
                                format!("{name}/n={n}/eps={eps}/rep={rep}"),
                                o.elapsed,
                            ));
                            outcomes.push(o);
                        }
                        Err(e) => {
                            eprintln!("bench {name} n={n} eps={eps} rep={rep}: {}", e.message());
                            failures += 1;
                        }
                    }
                }
                if let Some(row) = aggregate(name, n, eps, study, &outcomes, failures) {
                    rows.push(row);
                }
            }
        }
    }

    let report = BenchReport { seed, rows };
    write_json(&out.join("bench_table.json"), &report)?;
    write_bench_raw(&out.join("bench_raw.csv"), &records)?;
    write_timing_csv(&out.join("bench_timing.csv"), &timings)?;
    Ok(report)
}

fn aggregate(
    name: &str,
    n: usize,
    eps: f64,
    study: &crate::config::StudyConfig,
    outcomes: &[RepOutcome],
    failures: usize,
) -> Option<BenchRow> {
    if outcomes.is_empty() {
        return None;
    }
    let mut sq_point = 0.0;
    let mut count_point = 0usize;
    let mut sq_draw = 0.0;
    let mut count_draw = 0usize;
    let mut sq_mle = 0.0;
    let mut count_mle = 0usize;
    let mut max_dev: Option<f64> = None;
    let mut ds = Vec::new();
    let mut ess_sum = 0.0;
    let mut ess_n = 0usize;
    for o in outcomes {
        ds.push(o.d);
        for (j, (_, truth, est)) in o.point.iter().enumerate() {
            sq_point += (est - truth).powi(2);
            count_point += 1;
            if let Some(draws) = &o.draws {
                for v in &draws[j] {
                    sq_draw += (v - truth).powi(2);
                    count_draw += 1;
                }
            }
            if let Some(mle) = &o.mle {
                sq_mle += (mle[j] - truth).powi(2);
                count_mle += 1;
                let dev = (est - mle[j]).abs();
                max_dev = Some(max_dev.map_or(dev, |m: f64| m.max(dev)));
            }
        }
        if let Some(e) = o.ess {
            ess_sum += e;
            ess_n += 1;
        }
    }
    ds.sort_unstable();
    let rmse_point = (sq_point / count_point.max(1) as f64).sqrt();
    let rmse = if count_draw > 0 {
        (sq_draw / count_draw as f64).sqrt()
    } else {
        rmse_point
    };
    Some(BenchRow {
        model: name.to_string(),
        algorithm: format!("{:?}", study.algorithm).to_lowercase(),
        n,
        p0: if name.starts_with("logit") {
            name[5..].parse().unwrap_or(0)
        } else {
            0
        },
        epsilon: eps,
        d_median: ds[ds.len() / 2],
        replications: outcomes.len(),
        failures,
        rmse,
        rmse_point,
        rmse_mle: (count_mle > 0).then(|| (sq_mle / count_mle as f64).sqrt()),
        max_dev_from_mle: max_dev,
        ess_mean: (ess_n > 0).then(|| ess_sum / ess_n as f64),
        rmse_zero_corr: None,
        rmse_nonzero_corr: None,
        rmse_diagonal: None,
    })
}

fn bench_one(
    name: &str,
    n: usize,
    eps: f64,
    study: &crate::config::StudyConfig,
    rep_seed: u64,
) -> Result<RepOutcome, CliError> {
    let timer = Instant::now();
    if let Some(p0) = name.strip_prefix("logit") {
        let p0: usize = p0
            .parse()
            .map_err(|_| CliError::Config(format!("bad logit spec `{name}`")))?;
        return bench_logit(n, p0, study, rep_seed, timer);
    }
    if name == "wallenius" {
        return bench_wallenius(study, rep_seed, timer);
    }
    let model = model_by_name(name)
        .ok_or_else(|| CliError::Config(format!("unknown model `{name}`")))?;
    let truth = model.truth();
    let mut rng = Rng::stream(rep_seed, 0);
    let data = Dataset::from_values(model.simulate(&truth, n, &mut rng))?;
    let preps = pivotal::prepare_groups(&data, DPolicy::Epsilon(eps))?;
    let obj = Objective::univariate(model.as_ref(), &preps);
    let starts = univariate_starts(model.as_ref(), &data);
    let names = model.param_names();

    let (point, draws) = match study.algorithm {
        Algorithm::Pls => (inference::pls_estimate(&obj, &starts)?.theta, None),
        Algorithm::Plm => (inference::plm_estimate(&obj, &starts)?.theta, None),
        Algorithm::Am => {
            let start = inference::plm_estimate(&obj, &starts)?.theta;
            let s = study.iterations.unwrap_or(10_000);
            let d = inference::adaptive_metropolis(&obj, &start, s, 0.5, rep_seed)?;
            let cols: Vec<Vec<f64>> = (0..names.len()).map(|j| d.column(j)).collect();
            (d.posterior_mean(), Some(cols))
        }
        other => {
            return Err(CliError::Config(format!(
                "bench does not support {other:?} for univariate models"
            )))
        }
    };
    let mle = if study.with_mle { model.mle(&data) } else { None };
    Ok(RepOutcome {
        point: names
            .into_iter()
            .zip(truth.iter().cloned())
            .zip(point)
            .map(|((n, t), e)| (n, t, e))
            .collect(),
        draws,
        d: preps[0].grid.d(),
        elapsed: timer.elapsed().as_secs_f64(),
        mle,
        ess: None,
    })
}

fn bench_logit(
    n: usize,
    p0: usize,
    study: &crate::config::StudyConfig,
    rep_seed: u64,
    timer: Instant,
) -> Result<RepOutcome, CliError> {
    let (data, truth) = designs::simulate_logit(n, p0, rep_seed);
    let names: Vec<String> = (0..=p0).map(|j| format!("beta{j}")).collect();
    let (point, draws) = match study.algorithm {
        Algorithm::Plm => (logit_vague_plm(&data, None)?.theta, None),
        Algorithm::Am => {
            let p = data.p();
            let prior = LassoPrior::with_free_intercept(p, 0.5);
            let start = glm::logistic_irls(&data, 30).unwrap_or_else(|_| vec![0.0; p]);
            let s = study.iterations.unwrap_or(10_000);
            let d = glm::binreg_lasso_am(&data, &prior, &start, s, 0.5, rep_seed)?;
            let cols: Vec<Vec<f64>> = (0..=p0).map(|j| d.column(j)).collect();
            let mean = d.posterior_mean();
            (mean[..=p0].to_vec(), Some(cols))
        }
        other => {
            return Err(CliError::Config(format!(
                "bench logit supports plm or am, got {other:?}"
            )))
        }
    };
    let mle = study
        .with_mle
        .then(|| glm::logistic_irls(&data, 50).ok())
        .flatten();
    Ok(RepOutcome {
        point: names
            .into_iter()
            .zip(truth.iter().cloned())
            .zip(point)
            .map(|((nm, t), e)| (nm, t, e))
            .collect(),
        draws,
        d: 1,
        elapsed: timer.elapsed().as_secs_f64(),
        mle,
        ess: None,
    })
}

fn bench_wallenius(
    study: &crate::config::StudyConfig,
    rep_seed: u64,
    timer: Instant,
) -> Result<RepOutcome, CliError> {
    let (rows, m, truth) = designs::simulate_wallenius(rep_seed);
    let s = study.iterations.unwrap_or(20_000);
    let (draws, names) = wallenius_am(rows, &m, s, 0.5, rep_seed)?;
    let cols: Vec<Vec<f64>> = (0..truth.len()).map(|j| draws.column(j)).collect();
    Ok(RepOutcome {
        point: names
            .into_iter()
            .zip(truth.iter().cloned())
            .zip(draws.posterior_mean())
            .map(|((nm, t), e)| (nm, t, e))
            .collect(),
        draws: Some(cols),
        d: 1,
        elapsed: timer.elapsed().as_secs_f64(),
        mle: None,
        ess: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::StudyConfig;

    #[test]
    fn aggregate_rmse_matches_hand_computed_micro_case() {
        // two replications, two parameters: the study rmse is the square
        // root of the squared errors averaged over every (rep, parameter)
        let study = StudyConfig {
            models: vec!["x".into()],
            n: vec![10],
            epsilon: vec![0.1],
            replications: 2,
            algorithm: Algorithm::Pls,
            with_mle: true,
            iterations: None,
        };
        let outcomes = vec![
            RepOutcome {
                point: vec![("a".into(), 1.0, 1.5), ("b".into(), 2.0, 2.0)],
                draws: None,
                d: 4,
                elapsed: 0.0,
                mle: Some(vec![1.1, 2.2]),
                ess: None,
            },
            RepOutcome {
                point: vec![("a".into(), 1.0, 0.0), ("b".into(), 2.0, 3.0)],
                draws: None,
                d: 6,
                elapsed: 0.0,
                mle: Some(vec![0.9, 1.8]),
                ess: None,
            },
        ];
        let row = aggregate("x", 10, 0.1, &study, &outcomes, 1).unwrap();
        // squared errors: 0.25, 0, 1, 1 -> mean 0.5625
        assert!((row.rmse_point - 0.5625f64.sqrt()).abs() < 1e-12);
        assert_eq!(row.rmse, row.rmse_point);
        // mle squared errors: 0.01, 0.04, 0.01, 0.04 -> mean 0.025
        assert!((row.rmse_mle.unwrap() - 0.025f64.sqrt()).abs() < 1e-12);
        // deviations |est - mle|: 0.4, 0.2, 0.9, 1.2
        assert!((row.max_dev_from_mle.unwrap() - 1.2).abs() < 1e-12);
        assert_eq!(row.d_median, 6);
        assert_eq!(row.failures, 1);
        assert_eq!(row.replications, 2);

        // draw-based rmse averages over the posterior draws too
        let with_draws = vec![RepOutcome {
            point: vec![("a".into(), 1.0, 2.0)],
            draws: Some(vec![vec![1.0, 3.0]]),
            d: 2,
            elapsed: 0.0,
            mle: None,
            ess: None,
        }];
        let row = aggregate("x", 10, 0.1, &study, &with_draws, 0).unwrap();
        // draw errors: 0 and 2 -> mean square 2
        assert!((row.rmse - 2f64.sqrt()).abs() < 1e-12);
        assert!((row.rmse_point - 1.0).abs() < 1e-12);
    }
}

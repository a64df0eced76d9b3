//! Posterior estimation on top of the surrogate likelihood: penalized
//! least-squares (cube-root normal approximation) and penalized
//! maximization point estimates with Hessian covariances, adaptive and
//! plain Metropolis samplers, vanilla importance sampling with effective
//! sample size, and a rejection-ABC baseline.

use std::time::Instant;

use crate::data::Dataset;
use crate::diagnostics::{
    effective_sample_size, weighted_mean, weighted_quantile, weighted_sd,
};
use crate::error::{QilError, Result};
use crate::linalg::{Matrix, RunningCov};
use crate::model::Model;
use crate::optim::{self, NmOptions};
use crate::pivotal::{self, Prepared};
use crate::quantiles;
use crate::rng::Rng;

/// A posterior target: log density up to a constant, a parameter box, and
/// optionally the per-group pivotal statistics for least-squares fitting.
pub struct Objective<'a> {
    pub dim: usize,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    log_target: Box<dyn Fn(&[f64]) -> f64 + Sync + 'a>,
    log_prior: Box<dyn Fn(&[f64]) -> f64 + Sync + 'a>,
    pivotal_terms: Option<Box<dyn Fn(&[f64]) -> Option<Vec<(f64, f64)>> + Sync + 'a>>,
}

impl<'a> Objective<'a> {
    pub fn new(
        lower: Vec<f64>,
        upper: Vec<f64>,
        log_target: impl Fn(&[f64]) -> f64 + Sync + 'a,
        log_prior: impl Fn(&[f64]) -> f64 + Sync + 'a,
    ) -> Self {
        assert_eq!(lower.len(), upper.len());
        Self {
            dim: lower.len(),
            lower,
            upper,
            log_target: Box::new(log_target),
            log_prior: Box::new(log_prior),
            pivotal_terms: None,
        }
    }

    pub fn with_pivotal_terms(
        mut self,
        terms: impl Fn(&[f64]) -> Option<Vec<(f64, f64)>> + Sync + 'a,
    ) -> Self {
        self.pivotal_terms = Some(Box::new(terms));
        self
    }

    /// Surrogate posterior for a univariate model over prepared groups.
    pub fn univariate(model: &'a dyn Model, preps: &'a [Prepared]) -> Self {
        let bounds = model.bounds();
        let lower: Vec<f64> = bounds.iter().map(|b| b.0).collect();
        let upper: Vec<f64> = bounds.iter().map(|b| b.1).collect();
        let target = move |theta: &[f64]| -> f64 {
            match pivotal::log_qil_composite(preps, model, theta) {
                Ok(l) => l + model.log_prior(theta),
                Err(_) => f64::NEG_INFINITY,
            }
        };
        let prior = move |theta: &[f64]| model.log_prior(theta);
        let terms = move |theta: &[f64]| -> Option<Vec<(f64, f64)>> {
            preps
                .iter()
                .map(|p| {
                    pivotal::log_qil_iid(p, model, theta)
                        .ok()
                        .filter(|r| r.t.is_finite())
                        .map(|r| (r.t, r.d as f64))
                })
                .collect()
        };
        Objective::new(lower, upper, target, prior).with_pivotal_terms(terms)
    }

    pub fn in_box(&self, theta: &[f64]) -> bool {
        theta.len() == self.dim
            && theta
                .iter()
                .zip(self.lower.iter().zip(&self.upper))
                .all(|(t, (lo, hi))| t.is_finite() && t >= lo && t <= hi)
    }

    pub fn log_target(&self, theta: &[f64]) -> f64 {
        if !self.in_box(theta) {
            return f64::NEG_INFINITY;
        }
        (self.log_target)(theta)
    }

    pub fn log_prior(&self, theta: &[f64]) -> f64 {
        (self.log_prior)(theta)
    }

    pub fn pivotal_terms(&self, theta: &[f64]) -> Option<Vec<(f64, f64)>> {
        if !self.in_box(theta) {
            return None;
        }
        self.pivotal_terms.as_ref().and_then(|f| f(theta))
    }
}

/// Point estimate with an optional covariance from the inverse Hessian.
#[derive(Debug, Clone)]
pub struct Estimate {
    pub theta: Vec<f64>,
    pub covariance: Option<Matrix>,
    pub objective: f64,
    pub converged: bool,
}

/// A posterior sample, possibly importance-weighted.
#[derive(Debug, Clone)]
pub struct PosteriorDraws {
    pub samples: Vec<Vec<f64>>,
    pub weights: Option<Vec<f64>>,
    pub acceptance_rate: Option<f64>,
    pub ess: Option<f64>,
    pub seed: u64,
    pub elapsed: f64,
}

impl PosteriorDraws {
    pub fn column(&self, j: usize) -> Vec<f64> {
        self.samples.iter().map(|s| s[j]).collect()
    }

    pub fn posterior_mean(&self) -> Vec<f64> {
        let q = self.samples.first().map_or(0, Vec::len);
        (0..q)
            .map(|j| weighted_mean(&self.column(j), self.weights.as_deref()))
            .collect()
    }
}

/// Penalized least-squares estimation through the cube-root normal
/// approximation: minimize sum_k [(t_k/d_k)^{1/3} - (1 - 2/(9 d_k))]^2
/// minus the log prior.
pub fn pls_estimate(obj: &Objective, starts: &[Vec<f64>]) -> Result<Estimate> {
    let f = |theta: &[f64]| -> f64 {
        match obj.pivotal_terms(theta) {
            None => f64::INFINITY,
            Some(terms) => {
                let ss: f64 = terms
                    .iter()
                    .map(|&(t, d)| {
                        let r = (t / d).powf(1.0 / 3.0) - (1.0 - 2.0 / (9.0 * d));
                        r * r
                    })
                    .sum();
                let lp = obj.log_prior(theta);
                if !lp.is_finite() {
                    return f64::INFINITY;
                }
                ss - lp
            }
        }
    };
    let opts = NmOptions::for_dim(obj.dim);
    let r = optim::minimize_multistart(&f, starts, &obj.lower, &obj.upper, &opts)?;
    let hess = optim::fd_hessian(&f, &r.x, 1e-4);
    Ok(Estimate {
        covariance: optim::covariance_from_hessian(&hess),
        theta: r.x,
        objective: r.f,
        converged: r.converged,
    })
}

/// Posterior-mode estimation: maximize the log target; the covariance is
/// the inverse finite-difference Hessian of the negative log target.
pub fn plm_estimate(obj: &Objective, starts: &[Vec<f64>]) -> Result<Estimate> {
    plm_estimate_opts(obj, starts, &NmOptions::for_dim(starts[0].len()))
}

pub fn plm_estimate_opts(
    obj: &Objective,
    starts: &[Vec<f64>],
    opts: &NmOptions,
) -> Result<Estimate> {
    let f = |theta: &[f64]| -> f64 { -obj.log_target(theta) };
    let r = optim::minimize_multistart(&f, starts, &obj.lower, &obj.upper, opts)?;
    let hess = optim::fd_hessian(&f, &r.x, 1e-4);
    Ok(Estimate {
        covariance: optim::covariance_from_hessian(&hess),
        theta: r.x,
        objective: -r.f,
        converged: r.converged,
    })
}

/// Adaptive random-walk Metropolis with the two-component normal mixture
/// proposal: with probability .95 (after 2 dim(theta) warm steps) a scaled
/// draw from the running covariance of previously accepted states, else a
/// small fixed-covariance move.
pub fn adaptive_metropolis(
    obj: &Objective,
    theta0: &[f64],
    iterations: usize,
    burn_in: f64,
    seed: u64,
) -> Result<PosteriorDraws> {
    let start = Instant::now();
    let q = obj.dim;
    let mut rng = Rng::from_seed(seed);
    let mut x = theta0.to_vec();
    let mut lx = obj.log_target(&x);
    if !lx.is_finite() {
        return Err(QilError::NumericalError(
            "log target not finite at the chain start".into(),
        ));
    }
    let mut accepted = RunningCov::new(q);
    accepted.push(&x);
    let big_scale = 2.38 / (q as f64).sqrt();
    let small_scale = 0.01 / (q as f64).sqrt();
    let mut chain = Vec::with_capacity(iterations);
    let mut n_accept = 0usize;

    let mut big_chol: Option<Matrix> = None;
    let mut chol_stale = true;

    for s in 1..=iterations {
        let w_s = if s > 2 * q { 0.95 } else { 0.0 };
        let use_big = rng.uniform() < w_s;
        let mut prop = vec![0.0; q];
        let mut proposed = false;
        if use_big {
            if chol_stale {
                big_chol = accepted.covariance().and_then(|mut c| {
                    for i in 0..q {
                        c[(i, i)] += 1e-10;
                    }
                    c.cholesky().ok()
                });
                chol_stale = false;
            }
            if let Some(l) = &big_chol {
                let z: Vec<f64> = (0..q).map(|_| rng.standard_normal()).collect();
                let step = l.chol_lower_mul(&z);
                for i in 0..q {
                    prop[i] = x[i] + big_scale * step[i];
                }
                proposed = true;
            }
        }
        if !proposed {
            for i in 0..q {
                prop[i] = x[i] + small_scale * rng.standard_normal();
            }
        }
        let lp = obj.log_target(&prop);
        if lp.is_finite() && rng.uniform().ln() < lp - lx {
            x = prop;
            lx = lp;
            accepted.push(&x);
            chol_stale = true;
            n_accept += 1;
        }
        chain.push(x.clone());
    }

    let drop = ((iterations as f64) * burn_in).floor() as usize;
    let samples: Vec<Vec<f64>> = chain.into_iter().skip(drop).collect();
    Ok(PosteriorDraws {
        samples,
        weights: None,
        acceptance_rate: Some(n_accept as f64 / iterations as f64),
        ess: None,
        seed,
        elapsed: start.elapsed().as_secs_f64(),
    })
}

/// Plain random-walk Metropolis with fixed per-coordinate proposal sds.
pub fn metropolis(
    obj: &Objective,
    theta0: &[f64],
    proposal_sd: &[f64],
    iterations: usize,
    burn_in: f64,
    seed: u64,
) -> Result<PosteriorDraws> {
    let start = Instant::now();
    let mut rng = Rng::from_seed(seed);
    let mut x = theta0.to_vec();
    let mut lx = obj.log_target(&x);
    if !lx.is_finite() {
        return Err(QilError::NumericalError(
            "log target not finite at the chain start".into(),
        ));
    }
    let mut chain = Vec::with_capacity(iterations);
    let mut n_accept = 0usize;
    for _ in 0..iterations {
        let prop: Vec<f64> = x
            .iter()
            .zip(proposal_sd)
            .map(|(xi, sd)| xi + sd * rng.standard_normal())
            .collect();
        let lp = obj.log_target(&prop);
        if lp.is_finite() && rng.uniform().ln() < lp - lx {
            x = prop;
            lx = lp;
            n_accept += 1;
        }
        chain.push(x.clone());
    }
    let drop = ((iterations as f64) * burn_in).floor() as usize;
    Ok(PosteriorDraws {
        samples: chain.into_iter().skip(drop).collect(),
        weights: None,
        acceptance_rate: Some(n_accept as f64 / iterations as f64),
        ess: None,
        seed,
        elapsed: start.elapsed().as_secs_f64(),
    })
}

/// Vanilla importance sampling: iid prior draws weighted by the surrogate
/// likelihood, normalized with max-log subtraction.
pub fn vanilla_importance(
    log_likelihood: impl Fn(&[f64]) -> f64 + Sync,
    prior_sample: impl Fn(&mut Rng) -> Vec<f64>,
    iterations: usize,
    seed: u64,
) -> Result<PosteriorDraws> {
    let start = Instant::now();
    let mut samples = Vec::with_capacity(iterations);
    let mut log_w = Vec::with_capacity(iterations);
    for s in 0..iterations {
        let mut rng = Rng::stream(seed, s as u64);
        let theta = prior_sample(&mut rng);
        let lw = log_likelihood(&theta);
        samples.push(theta);
        log_w.push(lw);
    }
    let max_lw = log_w.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !max_lw.is_finite() {
        return Err(QilError::DegenerateWeights);
    }
    let mut weights: Vec<f64> = log_w.iter().map(|lw| (lw - max_lw).exp()).collect();
    let total: f64 = weights.iter().sum();
    if !(total > 0.0) {
        return Err(QilError::DegenerateWeights);
    }
    for w in &mut weights {
        *w /= total;
    }
    let ess = effective_sample_size(&weights);
    Ok(PosteriorDraws {
        samples,
        weights: Some(weights),
        acceptance_rate: None,
        ess: Some(ess),
        seed,
        elapsed: start.elapsed().as_secs_f64(),
    })
}

/// Summary statistics used by the ABC rejection sampler.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AbcSummaries {
    /// The seven octile quantiles.
    Octiles,
    /// The full sorted sample.
    AllOrderStats,
}

fn abc_summary(kind: AbcSummaries, sorted: &[f64]) -> Vec<f64> {
    match kind {
        AbcSummaries::Octiles => (1..8)
            .map(|j| quantiles::quantile_sorted(sorted, j as f64 / 8.0))
            .collect(),
        AbcSummaries::AllOrderStats => sorted.to_vec(),
    }
}

/// Rejection ABC: draw from the prior, simulate a synthetic data set of the
/// observed size, and keep the `keep` draws whose summaries fall closest to
/// the observed summaries in Euclidean distance.
pub fn abc_rejection(
    model: &dyn Model,
    observed: &Dataset,
    summaries: AbcSummaries,
    iterations: usize,
    keep: usize,
    seed: u64,
) -> Result<PosteriorDraws> {
    let start = Instant::now();
    let obs = abc_summary(summaries, observed.sorted());
    let n = observed.n();
    let mut scored: Vec<(f64, Vec<f64>)> = Vec::with_capacity(iterations);
    for s in 0..iterations {
        let mut rng = Rng::stream(seed, s as u64);
        let theta = model.prior_sample(&mut rng).ok_or_else(|| {
            QilError::DegenerateModel(format!("{} has no prior sampler", model.name()))
        })?;
        let mut synth = model.simulate(&theta, n, &mut rng);
        synth.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let sim = abc_summary(summaries, &synth);
        let dist = obs
            .iter()
            .zip(&sim)
            .map(|(a, b)| (a - b).powi(2))
            .sum::<f64>()
            .sqrt();
        scored.push((dist, theta));
    }
    scored.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    scored.truncate(keep.max(1));
    Ok(PosteriorDraws {
        samples: scored.into_iter().map(|(_, t)| t).collect(),
        weights: None,
        acceptance_rate: None,
        ess: None,
        seed,
        elapsed: start.elapsed().as_secs_f64(),
    })
}

/// Per-parameter posterior summary.
#[derive(Debug, Clone, serde::Serialize)]
pub struct ParamSummary {
    pub name: String,
    pub mean: f64,
    pub sd: f64,
    pub q2_5: f64,
    pub q25: f64,
    pub q50: f64,
    pub q75: f64,
    pub q97_5: f64,
}

/// Deterministic posterior summaries (weighted when weights are present).
pub fn summarize(draws: &PosteriorDraws, names: &[String]) -> Vec<ParamSummary> {
    let w = draws.weights.as_deref();
    names
        .iter()
        .enumerate()
        .map(|(j, name)| {
            let col = draws.column(j);
            ParamSummary {
                name: name.clone(),
                mean: weighted_mean(&col, w),
                sd: weighted_sd(&col, w),
                q2_5: weighted_quantile(&col, w, 0.025),
                q25: weighted_quantile(&col, w, 0.25),
                q50: weighted_quantile(&col, w, 0.5),
                q75: weighted_quantile(&col, w, 0.75),
                q97_5: weighted_quantile(&col, w, 0.975),
            }
        })
        .collect()
}

//! The surrogate-likelihood core: pivotal statistics for sample quantiles
//! and their chi-square log density, for iid and grouped data.
//!
//! The pivotal statistic is t = n (qhat - q_theta)' V^{-1} (qhat - q_theta)
//! with V the asymptotic quantile covariance
//! min(l_j, l_k)[1 - max(l_j, l_k)] / (f_j f_k). Because the kernel
//! min(l_j, l_k) - l_j l_k has a tridiagonal inverse, the quadratic form
//! collapses to an O(d) sum over increments of z_j = f_j (qhat_j - q_j)
//! pinned to zero at l = 0 and l = 1. The dense Cholesky route is kept as a
//! cross-check oracle.

use crate::data::Dataset;
use crate::error::{QilError, Result};
use crate::model::Model;
use crate::quantiles::{self, QuantileGrid};
use crate::special;

/// Pivotal statistics below this are floored before taking the chi-square
/// log density, which diverges at t = 0 when d < 2.
pub const T_FLOOR: f64 = 1e-12;

/// Default lowest probability of the extended grid used by the
/// equiprobability density.
pub const EQP_LAMBDA0: f64 = 1e-4;

/// Pivotal statistic together with its degrees of freedom and log density.
#[derive(Debug, Clone, Copy)]
pub struct PivotalResult {
    pub t: f64,
    pub d: usize,
    pub log_qil: f64,
}

/// Model densities evaluated at the model quantiles.
#[derive(Debug, Clone)]
pub struct DensityAtQuantiles {
    pub f_vals: Vec<f64>,
    pub source: DensitySource,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DensitySource {
    Analytic,
    Equiprobability,
}

/// How many quantiles to keep when preparing a data set.
#[derive(Debug, Clone, Copy)]
pub enum DPolicy {
    /// Kolmogorov-distance selection d(epsilon).
    Epsilon(f64),
    /// Fixed number of quantiles.
    Fixed(usize),
    /// All n quantiles.
    All,
}

/// Piecewise-constant density over the quantile bins, for models whose pdf
/// is intractable. `extended` holds q_theta at [lambda_0, lambda_1, ...,
/// lambda_d], strictly increasing.
pub fn equiprobability_density(extended: &[f64]) -> Result<DensityAtQuantiles> {
    let d = extended.len() - 1;
    let mut f_vals = Vec::with_capacity(d);
    for j in 1..=d {
        let gap = extended[j] - extended[j - 1];
        if !(gap > 0.0) || !gap.is_finite() {
            return Err(QilError::DegenerateQuantiles);
        }
        f_vals.push(1.0 / ((d as f64 + 1.0) * gap));
    }
    Ok(DensityAtQuantiles {
        f_vals,
        source: DensitySource::Equiprobability,
    })
}

/// O(d) quadratic form of the Brownian-bridge kernel: increments of z over
/// the extended grid {0, lambdas.., 1} with z pinned at zero on both ends.
fn bridge_quadform(lambdas: &[f64], z: &[f64]) -> f64 {
    let mut acc = 0.0;
    let mut prev_l = 0.0;
    let mut prev_z = 0.0;
    for (l, zj) in lambdas.iter().zip(z) {
        let dz = zj - prev_z;
        acc += dz * dz / (l - prev_l);
        prev_l = *l;
        prev_z = *zj;
    }
    acc += prev_z * prev_z / (1.0 - prev_l);
    acc
}

fn validate_inputs(grid: &QuantileGrid, q_model: &[f64], f: &[f64]) -> Result<()> {
    let d = grid.d();
    if q_model.len() != d || f.len() != d || grid.qhat.len() != d {
        return Err(QilError::NumericalError("length mismatch".into()));
    }
    let mut prev = 0.0;
    for &l in &grid.lambdas {
        if !(l > prev && l < 1.0) {
            return Err(QilError::InvalidProbability(l));
        }
        prev = l;
    }
    for j in 0..d {
        if !q_model[j].is_finite() || !grid.qhat[j].is_finite() || !(f[j] > 0.0) || !f[j].is_finite()
        {
            return Err(QilError::NumericalError(format!(
                "non-finite pivotal input at {j}"
            )));
        }
    }
    Ok(())
}

/// Pivotal statistic of a quantile grid against model quantiles, O(d).
pub fn pivotal_statistic(
    grid: &QuantileGrid,
    q_model: &[f64],
    densities: &DensityAtQuantiles,
) -> Result<PivotalResult> {
    let f = &densities.f_vals;
    validate_inputs(grid, q_model, f)?;
    let z: Vec<f64> = (0..grid.d())
        .map(|j| f[j] * (grid.qhat[j] - q_model[j]))
        .collect();
    let t = grid.n as f64 * bridge_quadform(&grid.lambdas, &z);
    finish(t, grid.d())
}

/// Dense-oracle evaluation of the same statistic: builds V explicitly and
/// solves by Cholesky. Quadratic in memory; intended for checks up to
/// d = 512.
pub fn pivotal_statistic_dense(
    grid: &QuantileGrid,
    q_model: &[f64],
    densities: &DensityAtQuantiles,
) -> Result<PivotalResult> {
    let f = &densities.f_vals;
    validate_inputs(grid, q_model, f)?;
    let d = grid.d();
    debug_assert!(d <= 512, "dense oracle is meant for small d");
    let mut v = crate::linalg::Matrix::zeros(d);
    for j in 0..d {
        for k in 0..d {
            let lj = grid.lambdas[j];
            let lk = grid.lambdas[k];
            v[(j, k)] = lj.min(lk) * (1.0 - lj.max(lk)) / (f[j] * f[k]);
        }
    }
    let r: Vec<f64> = (0..d).map(|j| grid.qhat[j] - q_model[j]).collect();
    let sol = v.solve_spd(&r)?;
    let t = grid.n as f64 * r.iter().zip(&sol).map(|(a, b)| a * b).sum::<f64>();
    finish(t, d)
}

fn finish(t: f64, d: usize) -> Result<PivotalResult> {
    if !t.is_finite() || t < -1e-9 {
        return Err(QilError::NumericalError(format!("pivotal statistic {t}")));
    }
    let t = t.max(0.0);
    let log_qil = special::chi2_logpdf(t.max(T_FLOOR), d as f64)?;
    Ok(PivotalResult { t, d, log_qil })
}

/// A data set reduced to what repeated likelihood evaluations need: the
/// quantile grid, sample moments (for the discrete surrogate), and the
/// achieved Kolmogorov gap.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub grid: QuantileGrid,
    pub mean: f64,
    pub var: f64,
    pub gap: f64,
}

/// Select the grid for one group of observations under a policy.
pub fn prepare(data: &Dataset, policy: DPolicy) -> Result<Prepared> {
    let grid = match policy {
        DPolicy::Epsilon(eps) => quantiles::select_d(data, eps)?,
        DPolicy::Fixed(d) => quantiles::rank_snapped_grid(data.sorted(), d),
        DPolicy::All => quantiles::rank_snapped_grid(data.sorted(), data.n()),
    };
    let gap = quantiles::achieved_gap(data, &grid);
    Ok(Prepared {
        gap,
        mean: data.mean(),
        var: data.variance(),
        grid,
    })
}

/// Per-group preparation for composite likelihoods.
pub fn prepare_groups(data: &Dataset, policy: DPolicy) -> Result<Vec<Prepared>> {
    (0..data.k_groups())
        .map(|k| prepare(&data.group_dataset(k), policy))
        .collect()
}

/// Replace model and sample quantiles of a discrete model by normal
/// quantiles matched to (mu_theta, var_theta) and (sample mean, sample
/// variance). Returns (model quantiles, sample quantiles, densities).
pub fn discrete_normal_surrogate(
    moments: (f64, f64),
    sample_moments: (f64, f64),
    lambdas: &[f64],
) -> Result<(Vec<f64>, Vec<f64>, DensityAtQuantiles)> {
    let (mu, var) = moments;
    if !(var > 0.0) || !var.is_finite() || !mu.is_finite() {
        return Err(QilError::DegenerateModel(format!(
            "surrogate variance {var} must be positive"
        )));
    }
    let (mu_hat, var_hat) = sample_moments;
    let sd = var.sqrt();
    let sd_hat = var_hat.max(1e-300).sqrt();
    let mut q_model = Vec::with_capacity(lambdas.len());
    let mut q_hat = Vec::with_capacity(lambdas.len());
    let mut f_vals = Vec::with_capacity(lambdas.len());
    for &l in lambdas {
        let z = special::normal_quantile(l)?;
        q_model.push(mu + sd * z);
        q_hat.push(mu_hat + sd_hat * z);
        f_vals.push(special::normal_pdf(z) / sd);
    }
    Ok((
        q_model,
        q_hat,
        DensityAtQuantiles {
            f_vals,
            source: DensitySource::Analytic,
        },
    ))
}

/// Log surrogate likelihood of one prepared group under `model` at `theta`.
///
/// Out-of-box theta yields log_qil = -inf (a rejection signal, not an
/// error). The statistic always uses the full sample size n, even when
/// d < n.
pub fn log_qil_iid(prep: &Prepared, model: &dyn Model, theta: &[f64]) -> Result<PivotalResult> {
    if !model.in_box(theta) {
        return Ok(PivotalResult {
            t: f64::INFINITY,
            d: prep.grid.d(),
            log_qil: f64::NEG_INFINITY,
        });
    }
    if let Some(m) = model.surrogate_moments(theta) {
        let (q_model, q_hat, dens) =
            discrete_normal_surrogate(m, (prep.mean, prep.var), &prep.grid.lambdas)?;
        let grid = QuantileGrid {
            lambdas: prep.grid.lambdas.clone(),
            qhat: q_hat,
            n: prep.grid.n,
        };
        return pivotal_statistic(&grid, &q_model, &dens);
    }

    let lambdas = &prep.grid.lambdas;
    let q_model: Vec<f64> = lambdas.iter().map(|&l| model.quantile(theta, l)).collect();
    let analytic: Option<Vec<f64>> = lambdas
        .iter()
        .map(|&l| model.pdf_at_quantile(theta, l).filter(|f| *f > 0.0 && f.is_finite()))
        .collect();
    let densities = match analytic {
        Some(f_vals) => DensityAtQuantiles {
            f_vals,
            source: DensitySource::Analytic,
        },
        None => {
            // extended grid must start strictly below lambda_1
            let l0 = EQP_LAMBDA0.min(0.5 * lambdas[0]);
            let mut extended = Vec::with_capacity(lambdas.len() + 1);
            extended.push(model.quantile(theta, l0));
            extended.extend_from_slice(&q_model);
            equiprobability_density(&extended)?
        }
    };
    pivotal_statistic(&prep.grid, &q_model, &densities)
}

/// Composite log surrogate likelihood: the sum of per-group values, the
/// groups being conditionally independent given theta.
pub fn log_qil_composite(
    preps: &[Prepared],
    model: &dyn Model,
    theta: &[f64],
) -> Result<f64> {
    let mut acc = 0.0;
    for prep in preps {
        let r = log_qil_iid(prep, model, theta)?;
        if r.log_qil == f64::NEG_INFINITY {
            return Ok(f64::NEG_INFINITY);
        }
        acc += r.log_qil;
    }
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Rng;

    fn grid(lambdas: Vec<f64>, qhat: Vec<f64>, n: usize) -> QuantileGrid {
        QuantileGrid { lambdas, qhat, n }
    }

    fn unit_densities(d: usize) -> DensityAtQuantiles {
        DensityAtQuantiles {
            f_vals: vec![1.0; d],
            source: DensitySource::Analytic,
        }
    }

    #[test]
    fn one_dimensional_hand_case() {
        // d=1, lambda=1/2, f=1, n=1, residual 0.5: V = 1/4, t = 0.25/0.25 = 1
        let g = grid(vec![0.5], vec![0.5], 1);
        let r = pivotal_statistic(&g, &[0.0], &unit_densities(1)).unwrap();
        assert!((r.t - 1.0).abs() < 1e-14);
        let dense = pivotal_statistic_dense(&g, &[0.0], &unit_densities(1)).unwrap();
        assert!((dense.t - 1.0).abs() < 1e-12);
    }

    #[test]
    fn zero_residual_floors_log() {
        let g = grid(vec![0.25, 0.5, 0.75], vec![1.0, 2.0, 3.0], 50);
        let r = pivotal_statistic(&g, &[1.0, 2.0, 3.0], &unit_densities(3)).unwrap();
        assert_eq!(r.t, 0.0);
        let expect = special::chi2_logpdf(T_FLOOR, 3.0).unwrap();
        assert_eq!(r.log_qil, expect);
    }

    #[test]
    fn fast_matches_dense_on_random_cases() {
        let mut rng = Rng::from_seed(42);
        for case in 0..200 {
            let d = 1 + rng.below(200);
            let mut lambdas: Vec<f64> = (0..d).map(|_| rng.uniform()).collect();
            lambdas.sort_by(|a, b| a.partial_cmp(b).unwrap());
            lambdas.dedup_by(|a, b| (*a - *b).abs() < 1e-6);
            let d = lambdas.len();
            let qhat: Vec<f64> = (0..d).map(|_| rng.standard_normal()).collect();
            let q_model: Vec<f64> = (0..d).map(|_| rng.standard_normal()).collect();
            let f = DensityAtQuantiles {
                f_vals: (0..d).map(|_| 0.1 + 3.0 * rng.uniform()).collect(),
                source: DensitySource::Analytic,
            };
            let g = grid(lambdas, qhat, 100 + case);
            let fast = pivotal_statistic(&g, &q_model, &f).unwrap();
            let dense = pivotal_statistic_dense(&g, &q_model, &f).unwrap();
            let rel = (fast.t - dense.t).abs() / dense.t.max(1e-300);
            assert!(rel < 1e-8, "d={d} rel={rel}");
        }
    }

    #[test]
    fn log_qil_is_chi2_logpdf_of_t() {
        let g = grid(vec![0.2, 0.4, 0.6, 0.8], vec![0.1, 0.5, 0.9, 1.4], 30);
        let r = pivotal_statistic(&g, &[0.0, 0.4, 0.8, 1.2], &unit_densities(4)).unwrap();
        let expect = special::chi2_logpdf(r.t.max(T_FLOOR), 4.0).unwrap();
        assert_eq!(r.log_qil, expect);
    }

    #[test]
    fn equiprobability_hand_cases() {
        // uniform(0,1), d=1, lambda0=0.25, lambda1=0.5: f = 1/(2 * 0.25) = 2
        let d = equiprobability_density(&[0.25, 0.5]).unwrap();
        assert!((d.f_vals[0] - 2.0).abs() < 1e-15);

        // equal spacing -> all values equal 1/((d+1) gap)
        let d = equiprobability_density(&[0.0, 0.1, 0.2, 0.3]).unwrap();
        for f in &d.f_vals {
            assert!((f - 1.0 / (4.0 * 0.1)).abs() < 1e-12);
        }

        assert!(matches!(
            equiprobability_density(&[0.5, 0.5]),
            Err(QilError::DegenerateQuantiles)
        ));
    }

    #[test]
    fn surrogate_moment_match_gives_zero_t() {
        let lambdas = crate::quantiles::equispaced_lambdas(9);
        let (qm, qh, dens) =
            discrete_normal_surrogate((2.0, 4.0), (2.0, 4.0), &lambdas).unwrap();
        assert_eq!(qm, qh);
        let g = grid(lambdas, qh, 100);
        let r = pivotal_statistic(&g, &qm, &dens).unwrap();
        assert!(r.t < 1e-20);
        assert!(discrete_normal_surrogate((2.0, 0.0), (2.0, 4.0), &[0.5]).is_err());
    }

    #[test]
    fn rejects_bad_inputs() {
        let g = grid(vec![0.5], vec![f64::NAN], 10);
        assert!(pivotal_statistic(&g, &[0.0], &unit_densities(1)).is_err());
        let g = grid(vec![0.5, 0.4], vec![0.0, 0.0], 10);
        assert!(pivotal_statistic(&g, &[0.0, 0.0], &unit_densities(2)).is_err());
    }
}

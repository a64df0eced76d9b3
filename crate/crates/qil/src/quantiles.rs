//! Sample quantiles, empirical cdfs, and selection of the number of
//! quantiles d(epsilon) by Kolmogorov distance.

use crate::data::Dataset;
use crate::error::{QilError, Result};

/// A grid of sample quantiles: probabilities, quantile values, and the size
/// of the sample they were extracted from.
#[derive(Debug, Clone)]
pub struct QuantileGrid {
    pub lambdas: Vec<f64>,
    pub qhat: Vec<f64>,
    /// Full source-sample size (not d).
    pub n: usize,
}

impl QuantileGrid {
    pub fn d(&self) -> usize {
        self.lambdas.len()
    }
}

/// Fraction of observations <= x (right-continuous step function).
pub fn empirical_cdf(data: &Dataset, x: f64) -> Result<f64> {
    let v = data.sorted();
    if v.is_empty() {
        return Err(QilError::EmptyData);
    }
    Ok(count_le(v, x) as f64 / v.len() as f64)
}

fn count_le(sorted: &[f64], x: f64) -> usize {
    sorted.partition_point(|y| *y <= x)
}

/// Linear-interpolation sample quantile of a sorted slice at probability
/// `lambda`: h = (n-1) lambda + 1 over 1-based order statistics.
pub fn quantile_sorted(sorted: &[f64], lambda: f64) -> f64 {
    let n = sorted.len();
    debug_assert!(n >= 1);
    let h = (n as f64 - 1.0) * lambda;
    let lo = h.floor() as usize;
    let frac = h - lo as f64;
    if lo + 1 >= n {
        sorted[n - 1]
    } else {
        sorted[lo] + frac * (sorted[lo + 1] - sorted[lo])
    }
}

/// Grid of d exact order statistics at their rank probabilities: ranks
/// k_j = round(j (n+1)/(d+1)) and lambda_j = k_j/(n+1). Interpolated
/// quantiles average adjacent order statistics, which deflates the local
/// variance the pivotal covariance assumes; exact order statistics at exact
/// rank probabilities keep the statistic calibrated. For d = n this is
/// every order statistic at j/(n+1).
pub fn rank_snapped_grid(sorted: &[f64], d: usize) -> QuantileGrid {
    let n = sorted.len();
    let d = d.clamp(1, n);
    let step = (n as f64 + 1.0) / (d as f64 + 1.0);
    let mut lambdas = Vec::with_capacity(d);
    let mut qhat = Vec::with_capacity(d);
    for j in 1..=d {
        let rank = (j as f64 * step).round().clamp(1.0, n as f64) as usize;
        lambdas.push(rank as f64 / (n as f64 + 1.0));
        qhat.push(sorted[rank - 1]);
    }
    QuantileGrid { lambdas, qhat, n }
}

/// Sample quantiles at the given strictly increasing probabilities in (0,1).
pub fn sample_quantiles(data: &Dataset, lambdas: &[f64]) -> Result<QuantileGrid> {
    let v = data.sorted();
    if v.is_empty() {
        return Err(QilError::EmptyData);
    }
    let mut prev = 0.0;
    for &l in lambdas {
        if !(l > 0.0 && l < 1.0) {
            return Err(QilError::InvalidProbability(l));
        }
        if l <= prev {
            return Err(QilError::InvalidProbability(l));
        }
        prev = l;
    }
    let qhat = lambdas.iter().map(|&l| quantile_sorted(v, l)).collect();
    Ok(QuantileGrid {
        lambdas: lambdas.to_vec(),
        qhat,
        n: v.len(),
    })
}

/// Equally spaced probabilities j/(d+1), j = 1..d.
pub fn equispaced_lambdas(d: usize) -> Vec<f64> {
    (1..=d).map(|j| j as f64 / (d + 1) as f64).collect()
}

/// Kolmogorov distance between the data ecdf and the ecdf of the d quantile
/// values (each with mass 1/d), evaluated over the data points.
pub fn kolmogorov_gap(sorted: &[f64], quantile_values: &[f64]) -> f64 {
    let n = sorted.len() as f64;
    let d = quantile_values.len() as f64;
    let mut gap = 0.0f64;
    let mut j = 0usize; // quantile values <= current data point
    let mut i = 0usize;
    while i < sorted.len() {
        let x = sorted[i];
        // advance to the last tie so F_n(x) counts every copy
        while i + 1 < sorted.len() && sorted[i + 1] == x {
            i += 1;
        }
        while j < quantile_values.len() && quantile_values[j] <= x {
            j += 1;
        }
        let fn_x = (i + 1) as f64 / n;
        let fd_x = j as f64 / d;
        gap = gap.max((fn_x - fd_x).abs());
        i += 1;
    }
    gap
}

/// Select the smallest number d of (nearly) equally spaced quantiles whose
/// ecdf lies within Kolmogorov distance `epsilon` of the full-data ecdf.
/// eps = 0 makes d = n. The scan recomputes the exact gap at every
/// candidate d because the gap is not monotone in d.
pub fn select_d(data: &Dataset, epsilon: f64) -> Result<QuantileGrid> {
    if !(0.0..1.0).contains(&epsilon) {
        return Err(QilError::InvalidProbability(epsilon));
    }
    let v = data.sorted();
    if v.is_empty() {
        return Err(QilError::EmptyData);
    }
    let n = v.len();
    if epsilon == 0.0 {
        return Ok(rank_snapped_grid(v, n));
    }
    for d in 1..=n {
        let grid = rank_snapped_grid(v, d);
        if kolmogorov_gap(v, &grid.qhat) <= epsilon {
            return Ok(grid);
        }
    }
    Ok(rank_snapped_grid(v, n))
}

/// Achieved Kolmogorov gap of a grid against its source data.
pub fn achieved_gap(data: &Dataset, grid: &QuantileGrid) -> f64 {
    kolmogorov_gap(data.sorted(), &grid.qhat)
}

/// Standardize each column of a data matrix to sample mean 0 and variance 1
/// (n-1 denominator).
pub fn standardize(rows: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
    if rows.is_empty() {
        return Err(QilError::EmptyData);
    }
    let n = rows.len();
    let p = rows[0].len();
    let mut out = rows.to_vec();
    for j in 0..p {
        let mean = rows.iter().map(|r| r[j]).sum::<f64>() / n as f64;
        let var = if n > 1 {
            rows.iter().map(|r| (r[j] - mean).powi(2)).sum::<f64>() / (n - 1) as f64
        } else {
            0.0
        };
        if var <= 0.0 {
            return Err(QilError::DegenerateColumn(j));
        }
        let sd = var.sqrt();
        for row in &mut out {
            row[j] = (row[j] - mean) / sd;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Rng;
    use proptest::prelude::*;

    fn data(values: &[f64]) -> Dataset {
        Dataset::from_values(values.to_vec()).unwrap()
    }

    #[test]
    fn ecdf_counts() {
        let d = data(&[1.0, 2.0, 3.0]);
        assert_eq!(empirical_cdf(&d, 2.0).unwrap(), 2.0 / 3.0);
        assert_eq!(empirical_cdf(&d, 0.0).unwrap(), 0.0);
        assert_eq!(empirical_cdf(&d, 3.0).unwrap(), 1.0);
    }

    #[test]
    fn quantiles_interpolate() {
        let d = data(&[1.0, 2.0, 3.0, 4.0, 5.0]);
        let g = sample_quantiles(&d, &[0.5]).unwrap();
        assert_eq!(g.qhat[0], 3.0);

        // h = (4-1)*0.5 + 1 = 2.5 interpolates y_(2), y_(3)
        let d = data(&[1.0, 2.0, 3.0, 4.0]);
        let g = sample_quantiles(&d, &[0.5]).unwrap();
        assert_eq!(g.qhat[0], 2.5);

        let d = data(&[10.0]);
        let g = sample_quantiles(&d, &[0.5]).unwrap();
        assert_eq!(g.qhat[0], 10.0);
    }

    #[test]
    fn quantiles_reject_bad_probabilities() {
        let d = data(&[1.0, 2.0]);
        assert!(sample_quantiles(&d, &[0.0]).is_err());
        assert!(sample_quantiles(&d, &[1.0]).is_err());
        assert!(sample_quantiles(&d, &[0.5, 0.5]).is_err());
    }

    #[test]
    fn select_d_zero_eps_full_grid() {
        let mut rng = Rng::from_seed(1);
        let d = data(&(0..200).map(|_| rng.standard_normal()).collect::<Vec<_>>());
        let g = select_d(&d, 0.0).unwrap();
        assert_eq!(g.d(), 200);
        assert!((g.lambdas[0] - 1.0 / 201.0).abs() < 1e-15);
    }

    #[test]
    fn select_d_half_eps_single_median() {
        let mut rng = Rng::from_seed(2);
        for _ in 0..5 {
            let d = data(&(0..57).map(|_| rng.standard_normal()).collect::<Vec<_>>());
            let g = select_d(&d, 0.5).unwrap();
            assert_eq!(g.d(), 1, "one quantile keeps the gap at 1/2");
        }
    }

    #[test]
    fn select_d_matches_brute_force_and_bound() {
        let mut rng = Rng::from_seed(3);
        let d = data(&(0..300).map(|_| rng.standard_normal()).collect::<Vec<_>>());
        for eps in [0.25, 0.1, 0.05, 0.02] {
            let g = select_d(&d, eps).unwrap();
            assert!(achieved_gap(&d, &g) <= eps);
            // brute force: first d meeting the bound
            let mut expect = None;
            for cand in 1..=d.n() {
                let grid = rank_snapped_grid(d.sorted(), cand);
                if kolmogorov_gap(d.sorted(), &grid.qhat) <= eps {
                    expect = Some(cand);
                    break;
                }
            }
            assert_eq!(g.d(), expect.unwrap());
        }
    }

    #[test]
    fn select_d_monotone_in_eps() {
        let mut rng = Rng::from_seed(4);
        let d = data(&(0..500).map(|_| rng.standard_normal()).collect::<Vec<_>>());
        let mut last = usize::MAX;
        for eps in [0.02, 0.05, 0.1, 0.2, 0.4] {
            let g = select_d(&d, eps).unwrap();
            assert!(g.d() <= last, "d must shrink as eps grows");
            last = g.d();
        }
    }

    #[test]
    fn standardize_basic() {
        let rows = vec![vec![0.0], vec![2.0]];
        let out = standardize(&rows).unwrap();
        let s = std::f64::consts::FRAC_1_SQRT_2;
        assert!((out[0][0] + s).abs() < 1e-12);
        assert!((out[1][0] - s).abs() < 1e-12);

        // idempotence
        let again = standardize(&out).unwrap();
        for (a, b) in again.iter().flatten().zip(out.iter().flatten()) {
            assert!((a - b).abs() < 1e-12);
        }

        assert!(matches!(
            standardize(&[vec![5.0], vec![5.0]]),
            Err(QilError::DegenerateColumn(0))
        ));
    }

    proptest! {
        // monotone in lambda and affine-equivariant for a > 0
        #[test]
        fn quantile_monotone_and_affine(
            seed in 0u64..500,
            a in 0.1f64..5.0,
            b in -10.0f64..10.0,
        ) {
            let mut rng = Rng::from_seed(seed);
            let values: Vec<f64> = (0..40).map(|_| rng.standard_normal()).collect();
            let d = data(&values);
            let lambdas: Vec<f64> = (1..20).map(|j| j as f64 / 20.0).collect();
            let g = sample_quantiles(&d, &lambdas).unwrap();
            for w in g.qhat.windows(2) {
                prop_assert!(w[1] >= w[0]);
            }
            let mapped = data(&values.iter().map(|y| a * y + b).collect::<Vec<_>>());
            let gm = sample_quantiles(&mapped, &lambdas).unwrap();
            for (qm, q) in gm.qhat.iter().zip(&g.qhat) {
                prop_assert!((qm - (a * q + b)).abs() < 1e-9 * (1.0 + qm.abs()));
            }
        }
    }
}

//! Biased sampling without replacement (the Wallenius noncentral
//! hypergeometric model): urn simulation, category-count moments, the
//! per-person d = 1 surrogate likelihood, and the hierarchical per-person
//! extension on log-ratio scale.
//!
//! Moments come from an exact forward pass over the bounded count states:
//! each state is visited once at its draw total, so the full mean/variance
//! profile over every number of draws costs O(#states * c) per weight
//! vector. The sequential urn simulator is the independent oracle. The
//! classical root-equation mean approximation is kept alongside for
//! reference.

use crate::error::{QilError, Result};
use crate::inference::PosteriorDraws;
use crate::rng::Rng;
use crate::special::{chi2_cdf, chi2_logpdf};
use std::time::Instant;

/// Choice weights on the simplex.
#[derive(Debug, Clone)]
pub struct ChoiceWeights(Vec<f64>);

impl ChoiceWeights {
    pub fn new(v: Vec<f64>) -> Result<Self> {
        if v.is_empty() || v.iter().any(|x| !x.is_finite() || *x < 0.0) {
            return Err(QilError::DegenerateModel("weights must be nonnegative".into()));
        }
        let s: f64 = v.iter().sum();
        if !(s > 0.0) {
            return Err(QilError::DegenerateModel("weights sum to zero".into()));
        }
        Ok(Self(v.into_iter().map(|x| x / s).collect()))
    }

    /// Softmax of (eta_1, ..., eta_{c-1}, 0), numerically stabilized.
    pub fn from_log_ratios(eta: &[f64]) -> Self {
        let mut z: Vec<f64> = eta.to_vec();
        z.push(0.0);
        let max = z.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let exps: Vec<f64> = z.iter().map(|v| (v - max).exp()).collect();
        let s: f64 = exps.iter().sum();
        Self(exps.into_iter().map(|e| e / s).collect())
    }

    /// Inverse transform: eta_j = ln(theta_j / theta_c).
    pub fn to_log_ratios(&self) -> Vec<f64> {
        let last = *self.0.last().unwrap();
        self.0[..self.0.len() - 1]
            .iter()
            .map(|t| (t / last).ln())
            .collect()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

/// Sequentially draw `n_draws` items: at each step category j is taken with
/// probability proportional to theta_j times its remaining count. The
/// brute-force oracle for the moment computations.
pub fn urn_simulate(
    theta: &[f64],
    m: &[usize],
    n_draws: usize,
    rng: &mut Rng,
) -> Result<Vec<usize>> {
    let total: usize = m.iter().sum();
    if n_draws > total {
        return Err(QilError::InvalidDraws {
            draws: n_draws,
            total,
        });
    }
    let mut taken = vec![0usize; m.len()];
    for _ in 0..n_draws {
        let weights: Vec<f64> = m
            .iter()
            .zip(&taken)
            .zip(theta)
            .map(|((mj, tj), th)| th * (mj - tj) as f64)
            .collect();
        let sum: f64 = weights.iter().sum();
        let mut u = rng.uniform() * sum;
        let mut pick = m.len() - 1;
        for (j, w) in weights.iter().enumerate() {
            if u < *w {
                pick = j;
                break;
            }
            u -= w;
        }
        taken[pick] += 1;
    }
    Ok(taken)
}

/// Root of sum_j m_j (1 - r^{theta_j}) = n_draws on (0,1), bisected to
/// 1e-12; the classical mean approximation mu_j = m_j (1 - r^{theta_j}).
pub fn mean_root_equation(theta: &[f64], m: &[usize], n_draws: usize) -> Result<Vec<f64>> {
    let total: usize = m.iter().sum();
    if n_draws > total {
        return Err(QilError::InvalidDraws {
            draws: n_draws,
            total,
        });
    }
    if n_draws == 0 {
        return Ok(vec![0.0; m.len()]);
    }
    if n_draws == total {
        return Ok(m.iter().map(|&x| x as f64).collect());
    }
    let consumed = |r: f64| -> f64 {
        m.iter()
            .zip(theta)
            .map(|(&mj, &th)| mj as f64 * (1.0 - r.powf(th)))
            .sum()
    };
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    // consumed(0) = N >= n, consumed(1) = 0
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if consumed(mid) > n_draws as f64 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-12 {
            break;
        }
    }
    let r = 0.5 * (lo + hi);
    Ok(m
        .iter()
        .zip(theta)
        .map(|(&mj, &th)| mj as f64 * (1.0 - r.powf(th)))
        .collect())
}

/// Precomputed state enumeration for one category-size vector.
#[derive(Debug, Clone)]
pub struct WalleniusTable {
    m: Vec<usize>,
    strides: Vec<usize>,
    total_items: usize,
    /// state indices grouped by the number of items drawn
    by_sum: Vec<Vec<u32>>,
    /// decoded counts, flattened c per state
    counts: Vec<u16>,
}

/// Mean and variance of every category count, for each draw total
/// 0..=n_max.
#[derive(Debug, Clone)]
pub struct WalleniusMoments {
    pub mean: Vec<Vec<f64>>,
    pub var: Vec<Vec<f64>>,
}

impl WalleniusTable {
    pub fn new(m: &[usize]) -> Self {
        let c = m.len();
        let mut strides = vec![1usize; c];
        for j in 1..c {
            strides[j] = strides[j - 1] * (m[j - 1] + 1);
        }
        let n_states: usize = m.iter().map(|x| x + 1).product();
        let total_items: usize = m.iter().sum();
        let mut by_sum = vec![Vec::new(); total_items + 1];
        let mut counts = vec![0u16; n_states * c];
        for idx in 0..n_states {
            let mut rem = idx;
            let mut s = 0usize;
            for j in (0..c).rev() {
                let x = rem / strides[j];
                rem %= strides[j];
                counts[idx * c + j] = x as u16;
                s += x;
            }
            by_sum[s].push(idx as u32);
        }
        Self {
            m: m.to_vec(),
            strides,
            total_items,
            by_sum,
            counts,
        }
    }

    pub fn total_items(&self) -> usize {
        self.total_items
    }

    /// Exact moments of the category counts under weights `theta`, for all
    /// draw totals up to `n_max`.
    pub fn moments(&self, theta: &[f64], n_max: usize) -> WalleniusMoments {
        let c = self.m.len();
        let n_max = n_max.min(self.total_items);
        let n_states: usize = self.m.iter().map(|x| x + 1).product();
        let mut prob = vec![0.0f64; n_states];
        prob[0] = 1.0;
        let mut mean = vec![vec![0.0; c]; n_max + 1];
        let mut var = vec![vec![0.0; c]; n_max + 1];
        let mut second = vec![0.0; c];
        for s in 0..=n_max {
            second.iter_mut().for_each(|v| *v = 0.0);
            for &idx in &self.by_sum[s] {
                let idx = idx as usize;
                let p = prob[idx];
                if p == 0.0 {
                    continue;
                }
                let counts = &self.counts[idx * c..(idx + 1) * c];
                for j in 0..c {
                    let x = counts[j] as f64;
                    mean[s][j] += p * x;
                    second[j] += p * x * x;
                }
                if s == n_max {
                    continue;
                }
                let mut denom = 0.0;
                for j in 0..c {
                    denom += theta[j] * (self.m[j] - counts[j] as usize) as f64;
                }
                if denom <= 0.0 {
                    continue;
                }
                for j in 0..c {
                    let free = self.m[j] - counts[j] as usize;
                    if free == 0 {
                        continue;
                    }
                    let next = idx + self.strides[j];
                    prob[next] += p * theta[j] * free as f64 / denom;
                }
            }
            for j in 0..c {
                var[s][j] = (second[j] - mean[s][j] * mean[s][j]).max(0.0);
            }
        }
        WalleniusMoments { mean, var }
    }
}

/// Per-person surrogate likelihood for choice counts: each person's counts
/// are standardized by their own moments (at their own draw total), the
/// squared-deviation sum is pushed through the complementary chi-square
/// transform, and t = 2 (D_R - 1/2)^2 gets the chi-square(1) log density.
/// Persons with zero or exhaustive draw totals carry no information and are
/// skipped; the count of skipped persons is returned alongside.
pub fn wallenius_log_qil(
    rows: &[Vec<f64>],
    table: &WalleniusTable,
    theta: &[f64],
) -> Result<(f64, usize)> {
    wallenius_log_qil_floored(rows, table, theta, crate::pivotal::T_FLOOR)
}

/// As [`wallenius_log_qil`] with an explicit floor on the per-person
/// statistic. The chi-square(1) log density diverges at t = 0, so the floor
/// caps the log-likelihood ridges where a person's depth transform crosses
/// one half; samplers need a coarser cap than point evaluation does.
pub fn wallenius_log_qil_floored(
    rows: &[Vec<f64>],
    table: &WalleniusTable,
    theta: &[f64],
    t_floor: f64,
) -> Result<(f64, usize)> {
    let c = table.m.len();
    let n_total = table.total_items;
    let n_max = rows
        .iter()
        .map(|r| r.iter().sum::<f64>() as usize)
        .max()
        .unwrap_or(0);
    let moments = table.moments(theta, n_max.min(n_total));
    let mut acc = 0.0;
    let mut skipped = 0usize;
    for row in rows {
        let n_i = row.iter().sum::<f64>().round() as usize;
        if n_i == 0 || n_i >= n_total {
            skipped += 1;
            continue;
        }
        let mut m_stat = 0.0;
        for j in 0..c {
            let v = moments.var[n_i][j].max(1e-12);
            let d = row[j] - moments.mean[n_i][j];
            m_stat += d * d / v;
        }
        let dr = 1.0 - chi2_cdf(m_stat, c as f64);
        let t = (2.0 * (dr - 0.5) * (dr - 0.5)).max(t_floor);
        acc += chi2_logpdf(t, 1.0)?;
    }
    Ok((acc, skipped))
}

/// Shared-weights surrogate posterior pieces for choice-count data,
/// parameterized on the unconstrained log-ratio scale.
pub struct WalleniusQil {
    pub table: WalleniusTable,
    pub rows: Vec<Vec<f64>>,
    pub t_floor: f64,
}

impl WalleniusQil {
    pub fn new(rows: Vec<Vec<f64>>, m: &[usize]) -> Result<Self> {
        for row in &rows {
            if row.len() != m.len() {
                return Err(QilError::Parse("row width != category count".into()));
            }
            for (v, &mj) in row.iter().zip(m) {
                if *v < 0.0 || *v > mj as f64 || v.fract() != 0.0 {
                    return Err(QilError::Parse(format!("count {v} outside 0..={mj}")));
                }
            }
        }
        Ok(Self {
            table: WalleniusTable::new(m),
            rows,
            t_floor: crate::pivotal::T_FLOOR,
        })
    }

    pub fn with_t_floor(mut self, t_floor: f64) -> Self {
        self.t_floor = t_floor;
        self
    }

    /// Log target in eta space under the uniform Dirichlet prior: the
    /// surrogate likelihood plus the softmax Jacobian sum_j ln theta_j.
    pub fn eta_log_target(&self, eta: &[f64]) -> f64 {
        let theta = ChoiceWeights::from_log_ratios(eta);
        let th = theta.as_slice();
        match wallenius_log_qil_floored(&self.rows, &self.table, th, self.t_floor) {
            Ok((l, _)) => l + th.iter().map(|t| t.max(1e-300).ln()).sum::<f64>(),
            Err(_) => f64::NEG_INFINITY,
        }
    }
}

/// Independent per-person Metropolis for the hierarchical model: each
/// person's log-ratio vector has a standard normal prior and its own
/// one-row likelihood, so the 5-dimensional chains share nothing. Draws are
/// returned as per-person weight vectors laid out person-major.
pub fn hierarchical_metropolis(
    rows: &[Vec<f64>],
    m: &[usize],
    iterations: usize,
    burn_in: f64,
    proposal_var: f64,
    seed: u64,
) -> Result<PosteriorDraws> {
    let timer = Instant::now();
    let table = WalleniusTable::new(m);
    let c = m.len();
    let n_persons = rows.len();
    let k = c - 1;
    let sd = proposal_var.sqrt();
    let drop = ((iterations as f64) * burn_in).floor() as usize;
    let kept = iterations - drop;
    let mut samples = vec![vec![0.0; n_persons * c]; kept];
    let mut total_accept = 0usize;

    for (i, row) in rows.iter().enumerate() {
        let mut rng = Rng::stream(seed, i as u64);
        let one = std::slice::from_ref(row);
        let log_post = |eta: &[f64]| -> f64 {
            let theta = ChoiceWeights::from_log_ratios(eta);
            match wallenius_log_qil(one, &table, theta.as_slice()) {
                Ok((l, _)) => l - 0.5 * eta.iter().map(|e| e * e).sum::<f64>(),
                Err(_) => f64::NEG_INFINITY,
            }
        };
        let mut eta = vec![0.0; k];
        let mut lp = log_post(&eta);
        for s in 0..iterations {
            let prop: Vec<f64> = eta.iter().map(|e| e + sd * rng.standard_normal()).collect();
            let lq = log_post(&prop);
            if lq.is_finite() && rng.uniform().ln() < lq - lp {
                eta = prop;
                lp = lq;
                total_accept += 1;
            }
            if s >= drop {
                let theta = ChoiceWeights::from_log_ratios(&eta);
                samples[s - drop][i * c..(i + 1) * c].copy_from_slice(theta.as_slice());
            }
        }
    }

    Ok(PosteriorDraws {
        samples,
        weights: None,
        acceptance_rate: Some(total_accept as f64 / (iterations * n_persons) as f64),
        ess: None,
        seed,
        elapsed: timer.elapsed().as_secs_f64(),
    })
}

/// The bundled before/after-school activities fixture: 56 persons, six
/// mutually exclusive categories with item totals (2, 4, 8, 2, 4, 2).
pub fn activities_data() -> (Vec<Vec<f64>>, Vec<usize>) {
    const STRINGS: [&str; 6] = [
        "02211221021122111222222121222222122122122222222222222222",
        "40124234232244244424204331442434221444220130122434342113",
        "85884446444581287756487565486666366664655674467546546756",
        "20222212222222222222122222222222122122020222122222222222",
        "20424122010100041232142240342210041022134424000202100211",
        "02222112020021121222121121220202020022220222122012111111",
    ];
    let m = vec![2usize, 4, 8, 2, 4, 2];
    let n = STRINGS[0].len();
    let rows = (0..n)
        .map(|i| {
            STRINGS
                .iter()
                .map(|s| (s.as_bytes()[i] - b'0') as f64)
                .collect()
        })
        .collect();
    (rows, m)
}

#[cfg(test)]
mod tests {
    use super::*;

    const ACT_M: [usize; 6] = [2, 4, 8, 2, 4, 2];
    const ACT_THETA: [f64; 6] = [0.10, 0.17, 0.12, 0.29, 0.14, 0.18];

    #[test]
    fn urn_edge_cases() {
        let mut rng = Rng::from_seed(1);
        let zero = urn_simulate(&[0.5, 0.5], &[3, 4], 0, &mut rng).unwrap();
        assert_eq!(zero, vec![0, 0]);
        let forced = urn_simulate(&[1.0], &[5], 4, &mut rng).unwrap();
        assert_eq!(forced, vec![4]);
        assert!(urn_simulate(&[1.0], &[5], 6, &mut rng).is_err());
    }

    #[test]
    fn equal_weights_match_hypergeometric_exactly() {
        let m = [2usize, 4, 8, 2, 4, 2];
        let n_total = 22.0;
        let theta = [1.0 / 6.0; 6];
        let table = WalleniusTable::new(&m);
        let mom = table.moments(&theta, 22);
        for n in [1usize, 5, 11, 21] {
            for j in 0..6 {
                let mj = m[j] as f64;
                let expect_mean = n as f64 * mj / n_total;
                let expect_var = n as f64 * (mj / n_total) * (1.0 - mj / n_total)
                    * (n_total - n as f64)
                    / (n_total - 1.0);
                assert!(
                    (mom.mean[n][j] - expect_mean).abs() < 1e-10,
                    "mean n={n} j={j}: {} vs {expect_mean}",
                    mom.mean[n][j]
                );
                assert!(
                    (mom.var[n][j] - expect_var).abs() < 1e-10,
                    "var n={n} j={j}: {} vs {expect_var}",
                    mom.var[n][j]
                );
            }
        }
    }

    #[test]
    fn moments_sum_and_boundaries() {
        let table = WalleniusTable::new(&ACT_M);
        let mom = table.moments(&ACT_THETA, 22);
        for n in 0..=22usize {
            let s: f64 = mom.mean[n].iter().sum();
            assert!((s - n as f64).abs() < 1e-10, "n={n}: {s}");
        }
        for j in 0..6 {
            assert!((mom.mean[22][j] - ACT_M[j] as f64).abs() < 1e-10);
            assert!(mom.var[22][j] < 1e-10);
        }
    }

    #[test]
    fn dp_moments_match_urn_oracle() {
        let table = WalleniusTable::new(&ACT_M);
        let n_draws = 11usize;
        let mom = table.moments(&ACT_THETA, n_draws);
        let reps = 40_000usize;
        let mut rng = Rng::from_seed(99);
        let mut sums = [0.0f64; 6];
        let mut sq = [0.0f64; 6];
        for _ in 0..reps {
            let y = urn_simulate(&ACT_THETA, &ACT_M, n_draws, &mut rng).unwrap();
            for j in 0..6 {
                sums[j] += y[j] as f64;
                sq[j] += (y[j] * y[j]) as f64;
            }
        }
        for j in 0..6 {
            let mean = sums[j] / reps as f64;
            let var = sq[j] / reps as f64 - mean * mean;
            let se_mean = (var / reps as f64).sqrt();
            assert!(
                (mean - mom.mean[n_draws][j]).abs() < 4.0 * se_mean,
                "mean j={j}: {mean} vs {}",
                mom.mean[n_draws][j]
            );
            assert!(
                (var - mom.var[n_draws][j]).abs() < 0.05 * (1.0 + var),
                "var j={j}: {var} vs {}",
                mom.var[n_draws][j]
            );
        }
    }

    #[test]
    fn root_equation_mean_close_to_exact() {
        let mu = mean_root_equation(&ACT_THETA, &ACT_M, 11).unwrap();
        assert!((mu.iter().sum::<f64>() - 11.0).abs() < 1e-10);
        let table = WalleniusTable::new(&ACT_M);
        let mom = table.moments(&ACT_THETA, 11);
        for j in 0..6 {
            assert!(
                (mu[j] - mom.mean[11][j]).abs() < 0.12,
                "j={j}: {} vs {}",
                mu[j],
                mom.mean[11][j]
            );
        }
    }

    #[test]
    fn log_qil_bounds_and_skips() {
        let (rows, m) = activities_data();
        let table = WalleniusTable::new(&m);
        let (l, skipped) = wallenius_log_qil(&rows, &table, &[1.0 / 6.0; 6]).unwrap();
        assert!(l.is_finite());
        // one person in the fixture chose everything (total 22 = N)
        assert_eq!(skipped, 1);

        // zero-count persons carry no information either
        let mut with_zero = rows.clone();
        with_zero.push(vec![0.0; 6]);
        let (l2, skipped) = wallenius_log_qil(&with_zero, &table, &[1.0 / 6.0; 6]).unwrap();
        assert_eq!(skipped, 2);
        assert!((l - l2).abs() < 1e-12);
    }

    #[test]
    fn t_stays_in_range() {
        // per-person statistic is 2 (D_R - 1/2)^2 with D_R in [0,1]
        for dr in [0.0f64, 0.25, 0.5, 0.75, 1.0] {
            let t = 2.0 * (dr - 0.5) * (dr - 0.5);
            assert!((0.0..=0.5).contains(&t));
        }
    }

    #[test]
    fn log_ratio_round_trip() {
        let mut rng = Rng::from_seed(8);
        for _ in 0..50 {
            let theta = ChoiceWeights::new(
                (0..6).map(|_| rng.gamma(1.0)).collect::<Vec<f64>>(),
            )
            .unwrap();
            let eta = theta.to_log_ratios();
            let back = ChoiceWeights::from_log_ratios(&eta);
            for (a, b) in back.as_slice().iter().zip(theta.as_slice()) {
                assert!((a - b).abs() < 1e-12);
            }
        }
        let uniform = ChoiceWeights::from_log_ratios(&[0.0; 5]);
        for t in uniform.as_slice() {
            assert!((t - 1.0 / 6.0).abs() < 1e-15);
        }
        let spiked = ChoiceWeights::from_log_ratios(&[50.0, 0.0, 0.0, 0.0, 0.0]);
        assert!(spiked.as_slice()[0] > 1.0 - 1e-12);
    }

    #[test]
    fn activities_fixture_shape() {
        let (rows, m) = activities_data();
        assert_eq!(rows.len(), 56);
        assert_eq!(m, vec![2, 4, 8, 2, 4, 2]);
        let mut exhaustive = 0;
        for row in &rows {
            for (v, &mj) in row.iter().zip(&m) {
                assert!(*v >= 0.0 && *v <= mj as f64);
            }
            let total: f64 = row.iter().sum();
            assert!(total > 0.0 && total <= 22.0);
            if total == 22.0 {
                exhaustive += 1;
            }
        }
        assert_eq!(exhaustive, 1);
    }

    #[test]
    fn hierarchical_sampler_runs() {
        let (rows, m) = activities_data();
        let few: Vec<Vec<f64>> = rows.into_iter().take(4).collect();
        let draws = hierarchical_metropolis(&few, &m, 400, 0.5, 0.176, 3).unwrap();
        assert_eq!(draws.samples[0].len(), 4 * 6);
        for s in &draws.samples {
            for person in 0..4 {
                let total: f64 = s[person * 6..(person + 1) * 6].iter().sum();
                assert!((total - 1.0).abs() < 1e-9);
            }
        }
    }
}

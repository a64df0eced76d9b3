//! Sampler diagnostics and small statistical utilities: Kolmogorov-Smirnov
//! tests, importance-sampling effective sample size, and weighted summaries.

/// Kolmogorov-Smirnov statistic of samples against a reference cdf.
pub fn ks_statistic<F: Fn(f64) -> f64>(samples: &[f64], cdf: F) -> f64 {
    let mut sorted = samples.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = sorted.len() as f64;
    let mut d = 0.0f64;
    for (i, x) in sorted.iter().enumerate() {
        let f = cdf(*x);
        d = d.max((f - i as f64 / n).abs());
        d = d.max(((i + 1) as f64 / n - f).abs());
    }
    d
}

/// Asymptotic Kolmogorov-Smirnov p-value with the Stephens small-sample
/// correction.
pub fn ks_pvalue(d: f64, n: usize) -> f64 {
    let sqrt_n = (n as f64).sqrt();
    let lambda = (sqrt_n + 0.12 + 0.11 / sqrt_n) * d;
    let mut p = 0.0;
    let mut sign = 1.0;
    for j in 1..=100 {
        let term = sign * (-2.0 * (j as f64 * lambda).powi(2)).exp();
        p += term;
        if term.abs() < 1e-12 {
            break;
        }
        sign = -sign;
    }
    (2.0 * p).clamp(0.0, 1.0)
}

/// Effective sample size of normalized importance weights: 1 / sum w^2.
pub fn effective_sample_size(normalized_weights: &[f64]) -> f64 {
    let s: f64 = normalized_weights.iter().map(|w| w * w).sum();
    if s <= 0.0 {
        0.0
    } else {
        1.0 / s
    }
}

pub fn weighted_mean(values: &[f64], weights: Option<&[f64]>) -> f64 {
    match weights {
        None => values.iter().sum::<f64>() / values.len() as f64,
        Some(w) => values.iter().zip(w).map(|(v, w)| v * w).sum(),
    }
}

pub fn weighted_sd(values: &[f64], weights: Option<&[f64]>) -> f64 {
    let m = weighted_mean(values, weights);
    match weights {
        None => {
            let n = values.len();
            if n < 2 {
                return 0.0;
            }
            (values.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
        }
        Some(w) => values
            .iter()
            .zip(w)
            .map(|(v, w)| w * (v - m).powi(2))
            .sum::<f64>()
            .sqrt(),
    }
}

/// Quantile of a weighted sample: smallest value whose cumulative weight
/// reaches `p`.
pub fn weighted_quantile(values: &[f64], weights: Option<&[f64]>, p: f64) -> f64 {
    let n = values.len();
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).unwrap());
    match weights {
        None => {
            let sorted: Vec<f64> = idx.iter().map(|&i| values[i]).collect();
            crate::quantiles::quantile_sorted(&sorted, p)
        }
        Some(w) => {
            let mut acc = 0.0;
            for &i in &idx {
                acc += w[i];
                if acc >= p {
                    return values[i];
                }
            }
            values[idx[n - 1]]
        }
    }
}

/// Monte Carlo standard error of a correlated chain by batch means.
pub fn batch_means_se(chain: &[f64], n_batches: usize) -> f64 {
    let b = n_batches.max(2).min(chain.len());
    let len = chain.len() / b;
    if len == 0 {
        return f64::INFINITY;
    }
    let means: Vec<f64> = (0..b)
        .map(|i| chain[i * len..(i + 1) * len].iter().sum::<f64>() / len as f64)
        .collect();
    let grand = means.iter().sum::<f64>() / b as f64;
    let var = means.iter().map(|m| (m - grand).powi(2)).sum::<f64>() / (b - 1) as f64;
    (var / b as f64).sqrt()
}

//! Simulation designs for the benchmark studies: correlated-covariate
//! logistic regression, the sparse-precision multivariate normal design,
//! and choice counts mirroring the bundled activities layout.

use qil::glm::{logit_inv, RegressionData};
use qil::linalg::Matrix;
use qil::wallenius::{activities_data, urn_simulate};
use qil::Rng;

/// True coefficient vector (intercept first): the block (3, 1.5, 0, 0, 2)
/// repeated across the covariates.
pub fn logit_truth(p0: usize) -> Vec<f64> {
    let block = [3.0, 1.5, 0.0, 0.0, 2.0];
    let mut beta = vec![0.0];
    for j in 0..p0 {
        beta.push(block[j % block.len()]);
    }
    beta
}

/// Logistic design: x = (1, x_2..x_{p0+1}) with AR(0.5)-correlated standard
/// normal covariates and binary responses at the stated truth.
pub fn simulate_logit(n: usize, p0: usize, seed: u64) -> (RegressionData, Vec<f64>) {
    let beta = logit_truth(p0);
    let mut rng = Rng::stream(seed, 0);
    let rho = 0.5f64;
    let innov = (1.0 - rho * rho).sqrt();
    let mut x = Vec::with_capacity(n);
    let mut y = Vec::with_capacity(n);
    for _ in 0..n {
        let mut row = Vec::with_capacity(p0 + 1);
        row.push(1.0);
        let mut prev = 0.0;
        for j in 0..p0 {
            let z = rng.standard_normal();
            let v = if j == 0 { z } else { rho * prev + innov * z };
            prev = v;
            row.push(v);
        }
        let eta: f64 = row.iter().zip(&beta).map(|(a, b)| a * b).sum();
        y.push(if rng.uniform() < logit_inv(eta) { 1.0 } else { 0.0 });
        x.push(row);
    }
    (RegressionData { x, y }, beta)
}

/// AR(1) correlation matrix rho^|j-l|.
pub fn ar_correlation(p: usize, rho: f64) -> Matrix {
    let mut m = Matrix::zeros(p);
    for i in 0..p {
        for j in 0..p {
            m[(i, j)] = rho.powi((i as i32 - j as i32).abs());
        }
    }
    m
}

/// Sparse-precision multivariate design: a 10x10 correlation matrix with 10
/// randomly placed nonzero correlations (the other 35 zero), data drawn
/// multivariate normal at mean zero. Returns the rows and the generating
/// covariance.
pub fn simulate_sparse_normal(n: usize, seed: u64) -> (Vec<Vec<f64>>, Matrix) {
    let p = 10;
    let mut rng = Rng::stream(seed, 0);
    let sigma = qil::depth::random_sparse_correlation(p, 10, &mut rng);
    let chol = sigma.cholesky().expect("shrunk to positive definite");
    let rows = (0..n)
        .map(|_| {
            let z: Vec<f64> = (0..p).map(|_| rng.standard_normal()).collect();
            chol.chol_lower_mul(&z)
        })
        .collect();
    (rows, sigma)
}

/// The choice-weight truth used by the biased-urn study.
pub fn wallenius_truth() -> Vec<f64> {
    vec![0.10, 0.17, 0.12, 0.29, 0.14, 0.18]
}

/// Choice counts simulated at the stated truth with the same per-person
/// draw totals as the bundled activities data.
pub fn simulate_wallenius(seed: u64) -> (Vec<Vec<f64>>, Vec<usize>, Vec<f64>) {
    let (rows, m) = activities_data();
    let theta = wallenius_truth();
    let mut rng = Rng::stream(seed, 0);
    let sim = rows
        .iter()
        .map(|row| {
            let n_i = row.iter().sum::<f64>().round() as usize;
            urn_simulate(&theta, &m, n_i, &mut rng)
                .unwrap()
                .into_iter()
                .map(|c| c as f64)
                .collect()
        })
        .collect();
    (sim, m, theta)
}

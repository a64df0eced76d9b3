//! Nelder-Mead simplex minimization with box constraints, plus
//! finite-difference Hessians for covariance estimates at an optimum.

use crate::error::{QilError, Result};
use crate::linalg::Matrix;

#[derive(Debug, Clone)]
pub struct NmOptions {
    /// Total function-evaluation budget per start.
    pub max_evals: usize,
    /// Stop when the simplex f-spread falls below this (relative).
    pub tol_f: f64,
    /// Restarts from the incumbent with a shrunk simplex.
    pub restarts: usize,
}

impl NmOptions {
    pub fn for_dim(dim: usize) -> Self {
        Self {
            max_evals: 400 * dim.max(1),
            tol_f: 1e-10,
            restarts: 1,
        }
    }

    pub fn with_budget(dim: usize, max_evals: usize) -> Self {
        Self {
            max_evals,
            ..Self::for_dim(dim)
        }
    }
}

#[derive(Debug, Clone)]
pub struct OptimResult {
    pub x: Vec<f64>,
    pub f: f64,
    pub evals: usize,
    pub converged: bool,
}

fn clamp(x: &mut [f64], lower: &[f64], upper: &[f64]) {
    for i in 0..x.len() {
        x[i] = x[i].clamp(lower[i], upper[i]);
        if !x[i].is_finite() {
            x[i] = 0.5 * (lower[i] + upper[i]);
        }
    }
}

/// Minimize `f` from `x0` inside the box `[lower, upper]`.
pub fn minimize<F: Fn(&[f64]) -> f64>(
    f: F,
    x0: &[f64],
    lower: &[f64],
    upper: &[f64],
    opts: &NmOptions,
) -> OptimResult {
    let dim = x0.len();
    let mut evals = 0usize;
    let eval = |x: &[f64], evals: &mut usize| -> f64 {
        *evals += 1;
        let v = f(x);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };

    let mut best = x0.to_vec();
    clamp(&mut best, lower, upper);
    let mut best_f = eval(&best, &mut evals);
    let mut scale = 1.0;
    let mut converged = false;

    for _round in 0..=opts.restarts {
        // simplex around the incumbent
        let mut simplex: Vec<Vec<f64>> = Vec::with_capacity(dim + 1);
        let mut fvals: Vec<f64> = Vec::with_capacity(dim + 1);
        simplex.push(best.clone());
        fvals.push(best_f);
        for i in 0..dim {
            let mut v = best.clone();
            let span = (upper[i] - lower[i]).min(1e6);
            let mut h = scale * 0.05 * (1.0 + v[i].abs()).min(span);
            if v[i] + h > upper[i] {
                h = -h;
            }
            v[i] += h;
            clamp(&mut v, lower, upper);
            fvals.push(eval(&v, &mut evals));
            simplex.push(v);
        }

        while evals < opts.max_evals {
            // order ascending by f
            let mut idx: Vec<usize> = (0..=dim).collect();
            idx.sort_by(|&a, &b| fvals[a].partial_cmp(&fvals[b]).unwrap());
            let reorder_s: Vec<Vec<f64>> = idx.iter().map(|&i| simplex[i].clone()).collect();
            let reorder_f: Vec<f64> = idx.iter().map(|&i| fvals[i]).collect();
            simplex = reorder_s;
            fvals = reorder_f;

            let spread = fvals[dim] - fvals[0];
            if spread.abs() <= opts.tol_f * (1.0 + fvals[0].abs()) {
                converged = true;
                break;
            }

            // centroid of all but the worst
            let mut centroid = vec![0.0; dim];
            for v in simplex.iter().take(dim) {
                for (c, x) in centroid.iter_mut().zip(v) {
                    *c += x / dim as f64;
                }
            }

            let point = |coef: f64| -> Vec<f64> {
                let mut p: Vec<f64> = centroid
                    .iter()
                    .zip(&simplex[dim])
                    .map(|(c, w)| c + coef * (c - w))
                    .collect();
                clamp(&mut p, lower, upper);
                p
            };

            let refl = point(1.0);
            let f_refl = eval(&refl, &mut evals);
            if f_refl < fvals[0] {
                let exp = point(2.0);
                let f_exp = eval(&exp, &mut evals);
                if f_exp < f_refl {
                    simplex[dim] = exp;
                    fvals[dim] = f_exp;
                } else {
                    simplex[dim] = refl;
                    fvals[dim] = f_refl;
                }
            } else if f_refl < fvals[dim - 1] {
                simplex[dim] = refl;
                fvals[dim] = f_refl;
            } else {
                let (con, f_con) = if f_refl < fvals[dim] {
                    let c = point(0.5);
                    let fc = eval(&c, &mut evals);
                    (c, fc)
                } else {
                    let c = point(-0.5);
                    let fc = eval(&c, &mut evals);
                    (c, fc)
                };
                if f_con < fvals[dim].min(f_refl) {
                    simplex[dim] = con;
                    fvals[dim] = f_con;
                } else {
                    // shrink toward the best vertex
                    for i in 1..=dim {
                        let mut v: Vec<f64> = simplex[0]
                            .iter()
                            .zip(&simplex[i])
                            .map(|(b, x)| b + 0.5 * (x - b))
                            .collect();
                        clamp(&mut v, lower, upper);
                        fvals[i] = eval(&v, &mut evals);
                        simplex[i] = v;
                    }
                }
            }
        }

        let mut idx: Vec<usize> = (0..=dim).collect();
        idx.sort_by(|&a, &b| fvals[a].partial_cmp(&fvals[b]).unwrap());
        if fvals[idx[0]] < best_f {
            best_f = fvals[idx[0]];
            best = simplex[idx[0]].clone();
        }
        if evals >= opts.max_evals {
            break;
        }
        scale *= 0.1;
    }

    OptimResult {
        x: best,
        f: best_f,
        evals,
        converged,
    }
}

/// Minimize from several starting points, keeping the best finite solution.
pub fn minimize_multistart<F: Fn(&[f64]) -> f64>(
    f: F,
    starts: &[Vec<f64>],
    lower: &[f64],
    upper: &[f64],
    opts: &NmOptions,
) -> Result<OptimResult> {
    let mut best: Option<OptimResult> = None;
    for s in starts {
        let r = minimize(&f, s, lower, upper, opts);
        if r.f.is_finite() && best.as_ref().map_or(true, |b| r.f < b.f) {
            best = Some(r);
        }
    }
    best.ok_or_else(|| QilError::NoConvergence {
        message: format!("no finite objective value over {} starts", starts.len()),
        best: None,
    })
}

/// Symmetric finite-difference Hessian with relative steps.
pub fn fd_hessian<F: Fn(&[f64]) -> f64>(f: F, x: &[f64], rel_step: f64) -> Matrix {
    let dim = x.len();
    let h: Vec<f64> = x.iter().map(|xi| rel_step * (1.0 + xi.abs())).collect();
    let mut hess = Matrix::zeros(dim);
    let f0 = f(x);
    let mut xp = x.to_vec();
    for i in 0..dim {
        // diagonal
        xp.copy_from_slice(x);
        xp[i] = x[i] + h[i];
        let fp = f(&xp);
        xp[i] = x[i] - h[i];
        let fm = f(&xp);
        hess[(i, i)] = (fp - 2.0 * f0 + fm) / (h[i] * h[i]);
        for j in (i + 1)..dim {
            xp.copy_from_slice(x);
            xp[i] = x[i] + h[i];
            xp[j] = x[j] + h[j];
            let fpp = f(&xp);
            xp[j] = x[j] - h[j];
            let fpm = f(&xp);
            xp[i] = x[i] - h[i];
            xp[j] = x[j] + h[j];
            let fmp = f(&xp);
            xp[j] = x[j] - h[j];
            let fmm = f(&xp);
            let v = (fpp - fpm - fmp + fmm) / (4.0 * h[i] * h[j]);
            hess[(i, j)] = v;
            hess[(j, i)] = v;
        }
    }
    hess
}

/// Covariance as the inverse of a (symmetrized) Hessian of the negative log
/// target; None when not positive definite.
pub fn covariance_from_hessian(hess: &Matrix) -> Option<Matrix> {
    hess.inverse_spd().ok()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic_bowl() {
        let f = |x: &[f64]| (x[0] - 1.5).powi(2) + 3.0 * (x[1] + 0.5).powi(2);
        let r = minimize(
            f,
            &[0.0, 0.0],
            &[-10.0, -10.0],
            &[10.0, 10.0],
            &NmOptions::for_dim(2),
        );
        assert!((r.x[0] - 1.5).abs() < 1e-4, "{:?}", r.x);
        assert!((r.x[1] + 0.5).abs() < 1e-4);
    }

    #[test]
    fn box_constraint_active() {
        let f = |x: &[f64]| (x[0] - 5.0).powi(2);
        let r = minimize(f, &[0.0], &[-1.0], &[2.0], &NmOptions::for_dim(1));
        assert!((r.x[0] - 2.0).abs() < 1e-6, "optimum pinned at the bound");
    }

    #[test]
    fn rosenbrock_two_dim() {
        let f = |x: &[f64]| (1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2);
        let r = minimize(
            f,
            &[-1.2, 1.0],
            &[-5.0, -5.0],
            &[5.0, 5.0],
            &NmOptions {
                max_evals: 4000,
                tol_f: 1e-14,
                restarts: 2,
            },
        );
        assert!((r.x[0] - 1.0).abs() < 1e-3 && (r.x[1] - 1.0).abs() < 1e-3, "{:?}", r);
    }

    #[test]
    fn multistart_picks_finite() {
        let f = |x: &[f64]| {
            if x[0] < 0.0 {
                f64::INFINITY
            } else {
                (x[0] - 1.0).powi(2)
            }
        };
        let r = minimize_multistart(
            f,
            &[vec![-5.0], vec![3.0]],
            &[-10.0],
            &[10.0],
            &NmOptions::for_dim(1),
        )
        .unwrap();
        assert!((r.x[0] - 1.0).abs() < 1e-4);
    }

    #[test]
    fn hessian_of_quadratic() {
        let f = |x: &[f64]| 0.5 * (2.0 * x[0] * x[0] + 6.0 * x[1] * x[1] + 2.0 * x[0] * x[1]);
        let h = fd_hessian(f, &[0.3, -0.2], 1e-4);
        assert!((h[(0, 0)] - 2.0).abs() < 1e-4);
        assert!((h[(1, 1)] - 6.0).abs() < 1e-4);
        assert!((h[(0, 1)] - 1.0).abs() < 1e-4);
        let cov = covariance_from_hessian(&h).unwrap();
        // inverse of [[2,1],[1,6]] = [[6,-1],[-1,2]]/11
        assert!((cov[(0, 0)] - 6.0 / 11.0).abs() < 1e-3);
    }
}

//! Minimal dense linear algebra for the small symmetric systems used here
//! (proposal covariances, precision matrices, Hessians).

use crate::error::{QilError, Result};

/// Row-major square matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    pub n: usize,
    pub data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(n: usize) -> Self {
        Self { n, data: vec![0.0; n * n] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let n = rows.len();
        let mut m = Self::zeros(n);
        for (i, r) in rows.iter().enumerate() {
            assert_eq!(r.len(), n);
            m.data[i * n..(i + 1) * n].copy_from_slice(r);
        }
        m
    }

    pub fn scaled_identity(n: usize, s: f64) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m[(i, i)] = s;
        }
        m
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut out = vec![0.0; n];
        for i in 0..n {
            let row = &self.data[i * n..(i + 1) * n];
            out[i] = row.iter().zip(x).map(|(a, b)| a * b).sum();
        }
        out
    }

    pub fn quad_form(&self, x: &[f64]) -> f64 {
        let n = self.n;
        let mut acc = 0.0;
        for i in 0..n {
            let row = &self.data[i * n..(i + 1) * n];
            let mut s = 0.0;
            for j in 0..n {
                s += row[j] * x[j];
            }
            acc += x[i] * s;
        }
        acc
    }

    pub fn max_asymmetry(&self) -> f64 {
        let n = self.n;
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in (i + 1)..n {
                worst = worst.max((self[(i, j)] - self[(j, i)]).abs());
            }
        }
        worst
    }

    /// Lower Cholesky factor; errors if the matrix is not positive definite.
    pub fn cholesky(&self) -> Result<Matrix> {
        let n = self.n;
        let mut l = Matrix::zeros(n);
        for i in 0..n {
            for j in 0..=i {
                let mut s = self[(i, j)];
                for k in 0..j {
                    s -= l[(i, k)] * l[(j, k)];
                }
                if i == j {
                    if s <= 0.0 || !s.is_finite() {
                        return Err(QilError::NumericalError(format!(
                            "cholesky pivot {s} at row {i}"
                        )));
                    }
                    l[(i, j)] = s.sqrt();
                } else {
                    l[(i, j)] = s / l[(j, j)];
                }
            }
        }
        Ok(l)
    }

    /// Solve self * x = b for symmetric positive definite self.
    pub fn solve_spd(&self, b: &[f64]) -> Result<Vec<f64>> {
        let l = self.cholesky()?;
        Ok(l.chol_solve(b))
    }

    /// Inverse of a symmetric positive definite matrix.
    pub fn inverse_spd(&self) -> Result<Matrix> {
        let n = self.n;
        let l = self.cholesky()?;
        let mut inv = Matrix::zeros(n);
        let mut e = vec![0.0; n];
        for j in 0..n {
            e.fill(0.0);
            e[j] = 1.0;
            let col = l.chol_solve(&e);
            for i in 0..n {
                inv[(i, j)] = col[i];
            }
        }
        // symmetrize away roundoff
        for i in 0..n {
            for j in (i + 1)..n {
                let v = 0.5 * (inv[(i, j)] + inv[(j, i)]);
                inv[(i, j)] = v;
                inv[(j, i)] = v;
            }
        }
        Ok(inv)
    }

    /// Given self = L (lower Cholesky factor), solve L L^T x = b.
    pub fn chol_solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut y = b.to_vec();
        for i in 0..n {
            for k in 0..i {
                y[i] -= self[(i, k)] * y[k];
            }
            y[i] /= self[(i, i)];
        }
        for i in (0..n).rev() {
            for k in (i + 1)..n {
                y[i] -= self[(k, i)] * y[k];
            }
            y[i] /= self[(i, i)];
        }
        y
    }

    /// Given self = L, return L z for a standard normal z (correlated draw).
    pub fn chol_lower_mul(&self, z: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut out = vec![0.0; n];
        for i in 0..n {
            let mut s = 0.0;
            for k in 0..=i {
                s += self[(i, k)] * z[k];
            }
            out[i] = s;
        }
        out
    }

    /// Smallest eigenvalue by inverse-free Jacobi sweep; adequate for the
    /// small symmetric matrices used in tests.
    pub fn min_eigenvalue_sym(&self) -> f64 {
        let mut a = self.clone();
        let n = a.n;
        for _ in 0..100 {
            // largest off-diagonal element
            let (mut p, mut q, mut big) = (0, 1, 0.0f64);
            for i in 0..n {
                for j in (i + 1)..n {
                    if a[(i, j)].abs() > big {
                        big = a[(i, j)].abs();
                        p = i;
                        q = j;
                    }
                }
            }
            if big < 1e-13 {
                break;
            }
            let app = a[(p, p)];
            let aqq = a[(q, q)];
            let apq = a[(p, q)];
            let theta = 0.5 * (aqq - app) / apq;
            let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
            let c = 1.0 / (t * t + 1.0).sqrt();
            let s = t * c;
            for k in 0..n {
                let akp = a[(k, p)];
                let akq = a[(k, q)];
                a[(k, p)] = c * akp - s * akq;
                a[(k, q)] = s * akp + c * akq;
            }
            for k in 0..n {
                let apk = a[(p, k)];
                let aqk = a[(q, k)];
                a[(p, k)] = c * apk - s * aqk;
                a[(q, k)] = s * apk + c * aqk;
            }
        }
        (0..n).map(|i| a[(i, i)]).fold(f64::INFINITY, f64::min)
    }
}

impl std::ops::Index<(usize, usize)> for Matrix {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.n + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.n + j]
    }
}

/// Incremental mean and covariance (Welford), used for adaptive proposals.
#[derive(Debug, Clone)]
pub struct RunningCov {
    pub count: usize,
    mean: Vec<f64>,
    m2: Matrix,
}

impl RunningCov {
    pub fn new(dim: usize) -> Self {
        Self {
            count: 0,
            mean: vec![0.0; dim],
            m2: Matrix::zeros(dim),
        }
    }

    pub fn push(&mut self, x: &[f64]) {
        let n = self.mean.len();
        self.count += 1;
        let c = self.count as f64;
        let mut delta = vec![0.0; n];
        for i in 0..n {
            delta[i] = x[i] - self.mean[i];
            self.mean[i] += delta[i] / c;
        }
        for i in 0..n {
            let d2 = x[i] - self.mean[i];
            for j in 0..n {
                self.m2[(i, j)] += delta[j] * d2;
            }
        }
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    /// Sample covariance (n-1 denominator); None until two points are seen.
    pub fn covariance(&self) -> Option<Matrix> {
        if self.count < 2 {
            return None;
        }
        let mut c = self.m2.clone();
        let denom = (self.count - 1) as f64;
        for v in &mut c.data {
            *v /= denom;
        }
        Some(c)
    }
}

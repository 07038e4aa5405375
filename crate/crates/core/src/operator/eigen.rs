//! Cyclic Jacobi eigen-decomposition, used only as a small-scale oracle.
//!
//! The result is stored as `A = Bᵀ Λ B`: row `i` of `B` is the unit
//! eigenvector belonging to `lambda[i]`, and `lambda` is sorted descending.

use super::{DenseSymmetric, SymmetricOperator};
use crate::error::{Error, Result};

pub const DEFAULT_EIGEN_CAP: usize = 2048;

#[derive(Debug, Clone, Copy)]
pub struct EigenConfig {
    pub max_dim: usize,
    pub max_sweeps: usize,
    /// Stop once the off-diagonal Frobenius mass is below `tolerance · ‖A‖_F`.
    pub tolerance: f64,
}

impl Default for EigenConfig {
    fn default() -> Self {
        Self { max_dim: DEFAULT_EIGEN_CAP, max_sweeps: 100, tolerance: 1e-12 }
    }
}

#[derive(Debug, Clone)]
pub struct EigenDecomposition {
    pub dim: usize,
    /// Row-major orthonormal matrix; rows are eigenvectors.
    pub b: Vec<f64>,
    pub lambda: Vec<f64>,
    pub sweeps: usize,
}

impl EigenDecomposition {
    pub fn eigenvector(&self, i: usize) -> &[f64] {
        &self.b[i * self.dim..(i + 1) * self.dim]
    }

    /// `max |BᵀB − I|`.
    pub fn orthonormality_defect(&self) -> f64 {
        let n = self.dim;
        let mut worst = 0.0_f64;
        for i in 0..n {
            for j in 0..n {
                let mut s = 0.0;
                for k in 0..n {
                    s += self.b[k * n + i] * self.b[k * n + j];
                }
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((s - target).abs());
            }
        }
        worst
    }

    /// `max |BᵀΛB − A|`.
    pub fn reconstruction_defect(&self, a: &DenseSymmetric) -> f64 {
        let n = self.dim;
        let mut worst = 0.0_f64;
        for i in 0..n {
            for j in 0..n {
                let mut s = 0.0;
                for k in 0..n {
                    s += self.b[k * n + i] * self.lambda[k] * self.b[k * n + j];
                }
                worst = worst.max((s - a.get(i, j)).abs());
            }
        }
        worst
    }
}

pub fn eigenvalues(a: &DenseSymmetric) -> Result<EigenDecomposition> {
    eigenvalues_with(a, &EigenConfig::default())
}

pub fn eigenvalues_with(a: &DenseSymmetric, config: &EigenConfig) -> Result<EigenDecomposition> {
    let n = a.dim();
    if n > config.max_dim {
        return Err(Error::CapExceeded { dim: n, cap: config.max_dim });
    }
    let mut w = a.as_row_major().to_vec();
    let mut v = vec![0.0; n * n];
    for i in 0..n {
        v[i * n + i] = 1.0;
    }
    let target = config.tolerance * a.frobenius_norm();

    let mut sweeps = 0;
    while off_diagonal_norm(&w, n) > target {
        if sweeps == config.max_sweeps {
            return Err(Error::NoConvergence { sweeps });
        }
        sweeps += 1;
        for p in 0..n {
            for q in (p + 1)..n {
                rotate(&mut w, &mut v, n, p, q);
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| w[j * n + j].total_cmp(&w[i * n + i]));
    let lambda = order.iter().map(|&i| w[i * n + i]).collect();
    let mut b = vec![0.0; n * n];
    for (row, &col) in order.iter().enumerate() {
        for k in 0..n {
            b[row * n + k] = v[k * n + col];
        }
    }
    Ok(EigenDecomposition { dim: n, b, lambda, sweeps })
}

fn off_diagonal_norm(w: &[f64], n: usize) -> f64 {
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                s += w[i * n + j] * w[i * n + j];
            }
        }
    }
    s.sqrt()
}

/// One Jacobi rotation annihilating `w[p][q]`, accumulated into `v`.
fn rotate(w: &mut [f64], v: &mut [f64], n: usize, p: usize, q: usize) {
    let apq = w[p * n + q];
    if apq == 0.0 {
        return;
    }
    let app = w[p * n + p];
    let aqq = w[q * n + q];
    let theta = (aqq - app) / (2.0 * apq);
    let t = theta.signum() / (theta.abs() + theta.hypot(1.0));
    let c = 1.0 / t.hypot(1.0);
    let s = t * c;

    for k in 0..n {
        if k == p || k == q {
            continue;
        }
        let akp = w[k * n + p];
        let akq = w[k * n + q];
        let new_kp = c * akp - s * akq;
        let new_kq = s * akp + c * akq;
        w[k * n + p] = new_kp;
        w[p * n + k] = new_kp;
        w[k * n + q] = new_kq;
        w[q * n + k] = new_kq;
    }
    w[p * n + p] = app - t * apq;
    w[q * n + q] = aqq + t * apq;
    w[p * n + q] = 0.0;
    w[q * n + p] = 0.0;

    for k in 0..n {
        let vkp = v[k * n + p];
        let vkq = v[k * n + q];
        v[k * n + p] = c * vkp - s * vkq;
        v[k * n + q] = s * vkp + c * vkq;
    }
}

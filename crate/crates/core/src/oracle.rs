//! Exhaustive oracles over the Rademacher cube `{−1, +1}^m`.
//!
//! `zᵀAz` is even in `z`, so only representatives with `z_{m−1} = +1` are
//! visited: an [`ExactErrorDistribution`] holds `2^(m−1)` values, each
//! with weight `2^−(m−1)`.
//!
//! The cube is cut into `2^b` subcubes by fixing the top `b` free
//! coordinates; each subcube is walked in reflected Gray-code order so
//! that one coordinate flips per step. Flipping `z_k` updates
//! `q = zᵀAz` in O(1) from `y = Az` (`q ← q − 4 z_k y_k + 4 A_kk`) and
//! `y` in O(m). Subcube results are concatenated by subcube index, so
//! the value order is a function of `m` alone.

use std::io::Write;

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::{self, pairwise_sum};
use crate::operator::{DenseSymmetric, EigenDecomposition, SymmetricOperator};
use crate::sampler::{keyed_rng, Domain};

pub const DEFAULT_ORACLE_CAP: usize = 20;

/// Top free coordinates fixed per subcube.
const SPLIT_BITS: usize = 6;

#[derive(Debug, Clone, Copy)]
pub struct OracleConfig {
    pub max_dim: usize,
}

impl Default for OracleConfig {
    fn default() -> Self {
        Self { max_dim: DEFAULT_ORACLE_CAP }
    }
}

fn check_cap(dim: usize, cap: usize) -> Result<()> {
    if dim > cap {
        Err(Error::CapExceeded { dim, cap })
    } else {
        Ok(())
    }
}

fn split_bits(m: usize) -> usize {
    (m - 1).min(SPLIT_BITS)
}

/// Sign vector visited at `position` of the enumeration order.
pub fn sign_vector(m: usize, position: usize) -> Vec<f64> {
    assert!(m >= 1 && position < 1 << (m - 1));
    let b = split_bits(m);
    let low = m - 1 - b;
    let (sub, step) = (position >> low, position & ((1 << low) - 1));
    let gray = step ^ (step >> 1);
    let mut z = vec![1.0; m];
    for (j, zj) in z.iter_mut().enumerate().take(m - 1) {
        let bit = if j < low { (gray >> j) & 1 } else { (sub >> (j - low)) & 1 };
        if bit == 1 {
            *zj = -1.0;
        }
    }
    z
}

/// All representative values of `zᵀMz` for a row-major symmetric `M`.
fn enumerate_forms(a: &[f64], m: usize) -> Vec<f64> {
    let b = split_bits(m);
    let low = m - 1 - b;
    (0..1usize << b)
        .into_par_iter()
        .map(|sub| {
            let mut z = sign_vector(m, sub << low);
            let mut y = vec![0.0; m];
            for (j, &zj) in z.iter().enumerate() {
                for (yi, aij) in y.iter_mut().zip(&a[j * m..(j + 1) * m]) {
                    *yi += aij * zj;
                }
            }
            let mut q = numeric::dot(&z, &y);
            let mut out = Vec::with_capacity(1 << low);
            out.push(q);
            for step in 1..1usize << low {
                let k = step.trailing_zeros() as usize;
                let zk = z[k];
                q += 4.0 * (a[k * m + k] - zk * y[k]);
                let row = &a[k * m..(k + 1) * m];
                let s = 2.0 * zk;
                for (yi, aki) in y.iter_mut().zip(row) {
                    *yi -= s * aki;
                }
                z[k] = -zk;
                out.push(q);
            }
            out
        })
        .collect::<Vec<_>>()
        .concat()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Side {
    /// `|err| ≥ ε`
    TwoSided,
    /// `err ≥ ε`
    Upper,
    /// `err ≤ −ε`
    Lower,
}

impl Side {
    pub const ALL: [Side; 3] = [Side::TwoSided, Side::Upper, Side::Lower];

    pub fn id(self) -> &'static str {
        match self {
            Side::TwoSided => "two-sided",
            Side::Upper => "upper",
            Side::Lower => "lower",
        }
    }
}

/// Every value of `zᵀAz` over the cube, stored unnormalised.
#[derive(Debug, Clone, PartialEq)]
pub struct ExactErrorDistribution {
    pub dim: usize,
    pub trace: f64,
    pub values: Vec<f64>,
}

pub fn exact_distribution(a: &DenseSymmetric) -> Result<ExactErrorDistribution> {
    exact_distribution_with(a, &OracleConfig::default())
}

pub fn exact_distribution_with(a: &DenseSymmetric, config: &OracleConfig) -> Result<ExactErrorDistribution> {
    let m = a.dim();
    check_cap(m, config.max_dim)?;
    let trace = a.exact_trace();
    if !(trace > 0.0) {
        return Err(Error::NonPositiveTrace(trace));
    }
    Ok(ExactErrorDistribution { dim: m, trace, values: enumerate_forms(a.as_row_major(), m) })
}

impl ExactErrorDistribution {
    /// Probability mass of each stored value.
    pub fn weight(&self) -> f64 {
        1.0 / self.values.len() as f64
    }

    /// Relative errors `value / trace − 1`.
    pub fn errors(&self) -> impl Iterator<Item = f64> + '_ {
        self.values.iter().map(move |v| v / self.trace - 1.0)
    }

    pub fn mean(&self) -> f64 {
        pairwise_sum(&self.values) * self.weight()
    }

    /// `E |err|^d`.
    pub fn abs_moment(&self, d: u32) -> f64 {
        let terms: Vec<f64> = self.errors().map(|e| e.abs().powi(d as i32)).collect();
        pairwise_sum(&terms) * self.weight()
    }

    /// `‖err‖_d = (E |err|^d)^(1/d)`.
    pub fn abs_norm(&self, d: u32) -> f64 {
        self.abs_moment(d).powf(1.0 / f64::from(d))
    }

    pub fn tail(&self, eps: f64, side: Side) -> f64 {
        let hits = self
            .errors()
            .filter(|&e| match side {
                Side::TwoSided => e.abs() >= eps,
                Side::Upper => e >= eps,
                Side::Lower => e <= -eps,
            })
            .count();
        hits as f64 * self.weight()
    }

    /// `ln E exp(t · err)`, evaluated with a max shift.
    pub fn log_mgf(&self, t: f64) -> f64 {
        let exps: Vec<f64> = self.errors().map(|e| t * e).collect();
        let shift = exps.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let shifted: Vec<f64> = exps.iter().map(|x| (x - shift).exp()).collect();
        shift + (pairwise_sum(&shifted) * self.weight()).ln()
    }

    /// `E exp(t · err)`.
    pub fn mgf(&self, t: f64) -> f64 {
        self.log_mgf(t).exp()
    }

    /// Dumps `value,weight` rows.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["value", "weight"])?;
        let weight = self.weight();
        for v in &self.values {
            w.serialize((v, weight))?;
        }
        w.flush()?;
        Ok(())
    }
}

pub fn exact_abs_moment(dist: &ExactErrorDistribution, d: u32) -> f64 {
    dist.abs_moment(d)
}

pub fn exact_tail(dist: &ExactErrorDistribution, eps: f64, side: Side) -> f64 {
    dist.tail(eps, side)
}

pub fn exact_mgf(dist: &ExactErrorDistribution, t: f64) -> f64 {
    dist.mgf(t)
}

/// `Var(zᵀAz) = 2 Σ_{i≠j} A_ij²` for Rademacher `z`.
pub fn variance_formula(a: &DenseSymmetric) -> f64 {
    let m = a.dim();
    let mut off = Vec::with_capacity(m * m.saturating_sub(1) / 2);
    for i in 0..m {
        for j in (i + 1)..m {
            off.push(a.get(i, j) * a.get(i, j));
        }
    }
    4.0 * pairwise_sum(&off)
}

/// Zero-diagonal quadratic chaos `F(z) = Σ_{j≠k} a_jk z_j z_k` with
/// symmetric weights, stored once per unordered pair.
#[derive(Debug, Clone, PartialEq)]
pub struct ChaosPolynomial {
    dim: usize,
    /// `a_jk` for `j < k`, row by row.
    coefficients: Vec<f64>,
}

impl ChaosPolynomial {
    pub fn new(dim: usize, coefficients: Vec<f64>) -> Result<Self> {
        if dim < 2 {
            return Err(Error::domain("a chaos needs at least two variables"));
        }
        let pairs = dim * (dim - 1) / 2;
        if coefficients.len() != pairs {
            return Err(Error::DimensionMismatch { expected: pairs, got: coefficients.len() });
        }
        Ok(Self { dim, coefficients })
    }

    pub fn zeros(dim: usize) -> Result<Self> {
        Self::new(dim, vec![0.0; dim * dim.saturating_sub(1) / 2])
    }

    /// The monomial `z_j z_k` (weight 1/2 on each ordered pair).
    pub fn monomial(dim: usize, j: usize, k: usize) -> Result<Self> {
        if j == k || j >= dim || k >= dim {
            return Err(Error::domain(format!("monomial indices ({j}, {k}) invalid for dimension {dim}")));
        }
        let mut chaos = Self::zeros(dim)?;
        let idx = chaos.index(j.min(k), j.max(k));
        chaos.coefficients[idx] = 0.5;
        Ok(chaos)
    }

    /// Standard-normal weights, reproducible from `(seed, index)`.
    pub fn random_normal(dim: usize, seed: u64, index: u64) -> Result<Self> {
        let mut rng = keyed_rng(seed, Domain::Chaos, index);
        let pairs = dim * dim.saturating_sub(1) / 2;
        Self::new(dim, (0..pairs).map(|_| rng.sample(StandardNormal)).collect())
    }

    /// `λ_i Σ_{j≠k} B_ij B_ik z_j z_k`, the centred `i`-th spectral component of `zᵀAz`.
    pub fn spectral_component(eig: &EigenDecomposition, i: usize) -> Result<Self> {
        let (m, row, lambda) = (eig.dim, eig.eigenvector(i), eig.lambda[i]);
        let mut coefficients = Vec::with_capacity(m * m.saturating_sub(1) / 2);
        for j in 0..m {
            for k in (j + 1)..m {
                coefficients.push(lambda * row[j] * row[k]);
            }
        }
        Self::new(m, coefficients)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    fn index(&self, j: usize, k: usize) -> usize {
        debug_assert!(j < k);
        j * (2 * self.dim - j - 1) / 2 + (k - j - 1)
    }

    pub fn coefficient(&self, j: usize, k: usize) -> f64 {
        if j == k {
            0.0
        } else {
            self.coefficients[self.index(j.min(k), j.max(k))]
        }
    }

    pub fn evaluate(&self, z: &[f64]) -> f64 {
        let mut s = 0.0;
        for j in 0..self.dim {
            for k in (j + 1)..self.dim {
                s += self.coefficient(j, k) * z[j] * z[k];
            }
        }
        2.0 * s
    }

    /// `E F² = 2 Σ_{j≠k} a_jk²`: the products `z_j z_k` over unordered pairs are orthonormal.
    pub fn second_moment(&self) -> f64 {
        4.0 * self.coefficients.iter().map(|a| a * a).sum::<f64>()
    }

    /// Symmetric zero-diagonal matrix `M` with `zᵀMz = F(z)`.
    fn as_matrix(&self) -> Vec<f64> {
        let m = self.dim;
        let mut out = vec![0.0; m * m];
        for j in 0..m {
            for k in (j + 1)..m {
                let a = self.coefficient(j, k);
                out[j * m + k] = a;
                out[k * m + j] = a;
            }
        }
        out
    }
}

/// Every value of a chaos over the cube (one representative per `±z`).
#[derive(Debug, Clone)]
pub struct ChaosDistribution {
    pub values: Vec<f64>,
}

impl ChaosDistribution {
    pub fn new(chaos: &ChaosPolynomial) -> Result<Self> {
        Self::with_config(chaos, &OracleConfig::default())
    }

    pub fn with_config(chaos: &ChaosPolynomial, config: &OracleConfig) -> Result<Self> {
        check_cap(chaos.dim, config.max_dim)?;
        Ok(Self { values: enumerate_forms(&chaos.as_matrix(), chaos.dim) })
    }

    /// `‖F‖_d`.
    pub fn norm(&self, d: u32) -> f64 {
        let terms: Vec<f64> = self.values.iter().map(|f| f.abs().powi(d as i32)).collect();
        (pairwise_sum(&terms) / self.values.len() as f64).powf(1.0 / f64::from(d))
    }
}

/// Exact `‖F‖_d` by enumeration.
pub fn chaos_exact_norm(chaos: &ChaosPolynomial, d: u32) -> Result<f64> {
    if d == 0 {
        return Err(Error::domain("norm order d must be at least 1"));
    }
    Ok(ChaosDistribution::new(chaos)?.norm(d))
}

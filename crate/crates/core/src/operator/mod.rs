//! Symmetric positive semi-definite operators.
//!
//! Estimation only ever touches an operator through [`SymmetricOperator::apply_into`].
//! [`DenseSymmetric`] is the concrete type used by generators, file ingestion
//! and the exhaustive oracles; [`FnOperator`] wraps an arbitrary closure for
//! matrix-free use.

mod eigen;
mod generate;
mod matrix_market;

use std::fmt;

use crate::error::{Error, Result};
use crate::numeric;
use crate::sampler::{keyed_rng, Domain, SampleStream};

pub use eigen::{eigenvalues, eigenvalues_with, EigenConfig, EigenDecomposition, DEFAULT_EIGEN_CAP};
pub use generate::{generate, GeneratorKind, GeneratorSpec};
pub use matrix_market::{load_matrix_market, read_matrix_market, save_matrix_market, write_matrix_market};

/// Matrix-free access to a symmetric matrix.
pub trait SymmetricOperator: Send + Sync {
    fn dim(&self) -> usize;

    /// Computes `out = A v`. Both slices must have length [`dim`](Self::dim).
    fn apply_into(&self, v: &[f64], out: &mut [f64]);

    /// Known trace, if any. Relative-error reporting needs it.
    fn trace_hint(&self) -> Option<f64> {
        None
    }

    fn apply(&self, v: &[f64]) -> Result<Vec<f64>> {
        check_len(self.dim(), v.len())?;
        let mut out = vec![0.0; self.dim()];
        self.apply_into(v, &mut out);
        Ok(out)
    }
}

pub(crate) fn check_len(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, got })
    }
}

/// Dense symmetric matrix in full row-major storage.
#[derive(Clone, PartialEq)]
pub struct DenseSymmetric {
    dim: usize,
    data: Vec<f64>,
}

/// Relative tolerance on `|a_ij - a_ji|` accepted (and averaged away) at construction.
pub const SYMMETRY_TOLERANCE: f64 = 1e-12;

impl DenseSymmetric {
    /// Validates and symmetrizes a square grid.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let dim = rows.len();
        let mut data = Vec::with_capacity(dim * dim);
        for (row, r) in rows.iter().enumerate() {
            let r = r.as_ref();
            if r.len() != dim {
                return Err(Error::NonSquare { row, len: r.len(), dim });
            }
            data.extend_from_slice(r);
        }
        Self::from_row_major(dim, data)
    }

    pub fn from_row_major(dim: usize, mut data: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::EmptyMatrix);
        }
        if data.len() != dim * dim {
            return Err(Error::DimensionMismatch { expected: dim * dim, got: data.len() });
        }
        if let Some(pos) = data.iter().position(|x| !x.is_finite()) {
            return Err(Error::NonFinite { row: pos / dim, col: pos % dim });
        }
        let scale = data.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
        let tolerance = SYMMETRY_TOLERANCE * scale;
        let mut deviation = 0.0_f64;
        for i in 0..dim {
            for j in (i + 1)..dim {
                deviation = deviation.max((data[i * dim + j] - data[j * dim + i]).abs());
            }
        }
        if deviation > tolerance {
            return Err(Error::Asymmetric { deviation, tolerance });
        }
        if deviation > 0.0 {
            for i in 0..dim {
                for j in (i + 1)..dim {
                    let avg = 0.5 * (data[i * dim + j] + data[j * dim + i]);
                    data[i * dim + j] = avg;
                    data[j * dim + i] = avg;
                }
            }
        }
        Ok(Self { dim, data })
    }

    /// Builds from a closure over the upper triangle, mirroring into the lower.
    pub(crate) fn from_upper(dim: usize, mut entry: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = vec![0.0; dim * dim];
        for i in 0..dim {
            for j in i..dim {
                let x = entry(i, j);
                data[i * dim + j] = x;
                data[j * dim + i] = x;
            }
        }
        Self { dim, data }
    }

    pub fn identity(dim: usize) -> Result<Self> {
        Self::diagonal(&vec![1.0; dim])
    }

    pub fn diagonal(diag: &[f64]) -> Result<Self> {
        if diag.is_empty() {
            return Err(Error::EmptyMatrix);
        }
        let dim = diag.len();
        let mut data = vec![0.0; dim * dim];
        for (i, &d) in diag.iter().enumerate() {
            data[i * dim + i] = d;
        }
        Self::from_row_major(dim, data)
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.dim + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn as_row_major(&self) -> &[f64] {
        &self.data
    }

    /// Diagonal sum, accumulated left to right.
    pub fn exact_trace(&self) -> f64 {
        let mut t = 0.0;
        for i in 0..self.dim {
            t += self.get(i, i);
        }
        t
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    /// Eigenvalue-based PSD check: `min λ ≥ -1e-9 · max λ`.
    pub fn check_psd(&self) -> Result<EigenDecomposition> {
        let eig = eigenvalues(self)?;
        let max = eig.lambda.first().copied().unwrap_or(0.0);
        let min = eig.lambda.last().copied().unwrap_or(0.0);
        if min < -1e-9 * max.abs().max(f64::MIN_POSITIVE) {
            return Err(Error::NotPsd { min, max });
        }
        Ok(eig)
    }

    /// Numerical rank from the eigen-oracle.
    pub fn rank(&self) -> Result<usize> {
        let eig = eigenvalues(self)?;
        let max = eig.lambda.first().map(|x| x.abs()).unwrap_or(0.0);
        let cut = 1e-10 * max.max(f64::MIN_POSITIVE);
        Ok(eig.lambda.iter().filter(|l| l.abs() > cut).count())
    }
}

impl fmt::Debug for DenseSymmetric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut list = f.debug_list();
        for i in 0..self.dim.min(8) {
            list.entry(&self.row(i));
        }
        list.finish()?;
        if self.dim > 8 {
            write!(f, " ({}x{})", self.dim, self.dim)?;
        }
        Ok(())
    }
}

impl SymmetricOperator for DenseSymmetric {
    fn dim(&self) -> usize {
        self.dim
    }

    fn apply_into(&self, v: &[f64], out: &mut [f64]) {
        assert_eq!(v.len(), self.dim);
        assert_eq!(out.len(), self.dim);
        // Column-oriented accumulation (row j equals column j): the inner loop
        // is an axpy, which vectorises without reassociating any sum.
        out.fill(0.0);
        for (j, &vj) in v.iter().enumerate() {
            for (o, a) in out.iter_mut().zip(self.row(j)) {
                *o += a * vj;
            }
        }
    }

    fn trace_hint(&self) -> Option<f64> {
        Some(self.exact_trace())
    }
}

type ApplyFn = dyn Fn(&[f64], &mut [f64]) + Send + Sync;

/// Operator backed by a user closure.
pub struct FnOperator {
    dim: usize,
    apply: Box<ApplyFn>,
    trace_hint: Option<f64>,
}

impl FnOperator {
    pub fn new<F>(dim: usize, apply: F) -> Self
    where
        F: Fn(&[f64], &mut [f64]) + Send + Sync + 'static,
    {
        Self { dim, apply: Box::new(apply), trace_hint: None }
    }

    pub fn with_trace_hint(mut self, trace: f64) -> Self {
        self.trace_hint = Some(trace);
        self
    }
}

impl fmt::Debug for FnOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FnOperator")
            .field("dim", &self.dim)
            .field("trace_hint", &self.trace_hint)
            .finish_non_exhaustive()
    }
}

impl SymmetricOperator for FnOperator {
    fn dim(&self) -> usize {
        self.dim
    }

    fn apply_into(&self, v: &[f64], out: &mut [f64]) {
        (self.apply)(v, out)
    }

    fn trace_hint(&self) -> Option<f64> {
        self.trace_hint
    }
}

/// Outcome of the randomized symmetry probe.
#[derive(Debug, Clone, Copy)]
pub struct SymmetryProbe {
    /// Largest `|uᵀ(Av) − vᵀ(Au)|` over the probes.
    pub max_defect: f64,
    /// Tolerance it was compared against.
    pub tolerance: f64,
}

impl SymmetryProbe {
    pub fn passed(&self) -> bool {
        self.max_defect <= self.tolerance
    }
}

/// Checks `uᵀ(Av) ≈ vᵀ(Au)` on a handful of random sign vectors.
pub fn probe_symmetry(op: &dyn SymmetricOperator, seed: u64, probes: u64) -> SymmetryProbe {
    let m = op.dim();
    let (mut au, mut av) = (vec![0.0; m], vec![0.0; m]);
    let mut max_defect = 0.0_f64;
    let mut scale = 0.0_f64;
    for p in 0..probes {
        let u = SampleStream::new(seed, 2 * p).vector(m);
        let v = SampleStream::new(seed, 2 * p + 1).vector(m);
        op.apply_into(&u, &mut au);
        op.apply_into(&v, &mut av);
        max_defect = max_defect.max((numeric::dot(&u, &av) - numeric::dot(&v, &au)).abs());
        // ‖u‖ = ‖v‖ = √m; ‖Au‖/‖u‖ is a lower estimate of the operator norm.
        let opnorm = (numeric::dot(&au, &au).sqrt()).max(numeric::dot(&av, &av).sqrt()) / (m as f64).sqrt();
        scale = scale.max(m as f64 * opnorm);
    }
    SymmetryProbe { max_defect, tolerance: 1e-9 * scale }
}

/// Outcome of the cheap PSD probe for operators too large for the eigen-oracle.
#[derive(Debug, Clone, Copy)]
pub struct PsdProbe {
    /// Smallest `zᵀAz / ‖z‖²` seen.
    pub min_rayleigh: f64,
    pub tolerance: f64,
}

impl PsdProbe {
    pub fn passed(&self) -> bool {
        self.min_rayleigh >= -self.tolerance
    }
}

/// Runs `probes` Gaussian-direction Rayleigh quotients. A failure proves the
/// operator is indefinite; a pass proves nothing.
pub fn probe_psd(op: &dyn SymmetricOperator, seed: u64, probes: u64) -> PsdProbe {
    use rand_distr::{Distribution, StandardNormal};
    let m = op.dim();
    let mut az = vec![0.0; m];
    let mut min_rayleigh = f64::INFINITY;
    let mut diag_max = 0.0_f64;
    for p in 0..probes {
        let mut rng = keyed_rng(seed, Domain::Generator, u64::MAX - p);
        let z: Vec<f64> = (0..m).map(|_| StandardNormal.sample(&mut rng)).collect();
        op.apply_into(&z, &mut az);
        let zz = numeric::dot(&z, &z);
        if zz > 0.0 {
            let r = numeric::dot(&z, &az) / zz;
            min_rayleigh = min_rayleigh.min(r);
            diag_max = diag_max.max(r.abs());
        }
    }
    PsdProbe { min_rayleigh, tolerance: 1e-9 * diag_max }
}

//! Synthetic PSD test matrices.
//!
//! Specs use the one-line grammar `kind:m[:k][:seed]`:
//!
//! | kind           | fields              | matrix                              |
//! |----------------|---------------------|-------------------------------------|
//! | `identity`     | `m`                 | `I_m`                               |
//! | `diag-uniform` | `m[:seed]`          | `diag(u_1..u_m)`, `u_i ~ U[0,1)`    |
//! | `wishart`      | `m[:k][:seed]`      | `GGᵀ/k`, `G` is `m×k` standard normal (`k` defaults to `m`) |
//! | `rank`         | `m:k[:seed]`        | orthogonal projector of rank `k`    |
//!
//! Omitted seeds default to 0.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::StandardNormal;

use super::DenseSymmetric;
use crate::error::{Error, Result};
use crate::sampler::{keyed_rng, Domain};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum GeneratorKind {
    Identity,
    DiagonalUniform,
    Wishart,
    RankProjector,
}

impl GeneratorKind {
    pub fn name(self) -> &'static str {
        match self {
            GeneratorKind::Identity => "identity",
            GeneratorKind::DiagonalUniform => "diag-uniform",
            GeneratorKind::Wishart => "wishart",
            GeneratorKind::RankProjector => "rank",
        }
    }
}

impl FromStr for GeneratorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "identity" => GeneratorKind::Identity,
            "diag-uniform" | "diagonal_uniform" | "diag" => GeneratorKind::DiagonalUniform,
            "wishart" => GeneratorKind::Wishart,
            "rank" | "rank-projector" | "rank_projector" => GeneratorKind::RankProjector,
            other => return Err(Error::InvalidSpec(format!("unknown generator kind `{other}`"))),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct GeneratorSpec {
    pub kind: GeneratorKind,
    pub dim: usize,
    /// Wishart degrees of freedom or projector rank; ignored otherwise.
    pub k: usize,
    pub seed: u64,
}

impl GeneratorSpec {
    pub fn identity(dim: usize) -> Self {
        Self { kind: GeneratorKind::Identity, dim, k: dim, seed: 0 }
    }

    pub fn diagonal_uniform(dim: usize, seed: u64) -> Self {
        Self { kind: GeneratorKind::DiagonalUniform, dim, k: dim, seed }
    }

    pub fn wishart(dim: usize, k: usize, seed: u64) -> Self {
        Self { kind: GeneratorKind::Wishart, dim, k, seed }
    }

    pub fn rank_projector(dim: usize, k: usize, seed: u64) -> Self {
        Self { kind: GeneratorKind::RankProjector, dim, k, seed }
    }

    pub fn validate(&self) -> Result<()> {
        if self.dim == 0 {
            return Err(Error::InvalidSpec("dimension must be at least 1".into()));
        }
        match self.kind {
            GeneratorKind::Wishart | GeneratorKind::RankProjector if self.k == 0 => {
                Err(Error::InvalidSpec("k must be at least 1".into()))
            }
            GeneratorKind::RankProjector if self.k > self.dim => Err(Error::InvalidSpec(format!(
                "projector rank {} exceeds dimension {}",
                self.k, self.dim
            ))),
            _ => Ok(()),
        }
    }
}

impl fmt::Display for GeneratorSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = self.kind.name();
        match self.kind {
            GeneratorKind::Identity => write!(f, "{name}:{}", self.dim),
            GeneratorKind::DiagonalUniform => write!(f, "{name}:{}:{}", self.dim, self.seed),
            GeneratorKind::Wishart | GeneratorKind::RankProjector => {
                write!(f, "{name}:{}:{}:{}", self.dim, self.k, self.seed)
            }
        }
    }
}

impl FromStr for GeneratorSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut parts = s.trim().split(':');
        let kind: GeneratorKind = parts.next().unwrap_or_default().parse()?;
        let fields: Vec<&str> = parts.collect();
        let num = |i: usize, what: &str| -> Result<u64> {
            let text = fields[i];
            crate::sampler::parse_seed(text)
                .map_err(|_| Error::InvalidSpec(format!("{what} `{text}` is not a non-negative integer")))
        };
        let arity = |lo: usize, hi: usize| -> Result<()> {
            if (lo..=hi).contains(&fields.len()) {
                Ok(())
            } else {
                Err(Error::InvalidSpec(format!(
                    "`{}` takes {lo} to {hi} numeric fields, got {}",
                    kind.name(),
                    fields.len()
                )))
            }
        };
        let spec = match kind {
            GeneratorKind::Identity => {
                arity(1, 1)?;
                GeneratorSpec::identity(num(0, "dimension")? as usize)
            }
            GeneratorKind::DiagonalUniform => {
                arity(1, 2)?;
                let seed = if fields.len() > 1 { num(1, "seed")? } else { 0 };
                GeneratorSpec::diagonal_uniform(num(0, "dimension")? as usize, seed)
            }
            GeneratorKind::Wishart => {
                arity(1, 3)?;
                let dim = num(0, "dimension")? as usize;
                let k = if fields.len() > 1 { num(1, "k")? as usize } else { dim };
                let seed = if fields.len() > 2 { num(2, "seed")? } else { 0 };
                GeneratorSpec::wishart(dim, k, seed)
            }
            GeneratorKind::RankProjector => {
                arity(2, 3)?;
                let seed = if fields.len() > 2 { num(2, "seed")? } else { 0 };
                GeneratorSpec::rank_projector(num(0, "dimension")? as usize, num(1, "rank")? as usize, seed)
            }
        };
        spec.validate()?;
        Ok(spec)
    }
}

/// Materialises the spec. Every output is symmetric PSD by construction.
pub fn generate(spec: &GeneratorSpec) -> Result<DenseSymmetric> {
    spec.validate()?;
    let m = spec.dim;
    let mut rng = keyed_rng(spec.seed, Domain::Generator, spec.kind as u64);
    Ok(match spec.kind {
        GeneratorKind::Identity => DenseSymmetric::identity(m)?,
        GeneratorKind::DiagonalUniform => {
            let diag: Vec<f64> = (0..m).map(|_| rng.random::<f64>()).collect();
            DenseSymmetric::diagonal(&diag)?
        }
        GeneratorKind::Wishart => {
            let k = spec.k;
            let g: Vec<f64> = (0..m * k).map(|_| rng.sample(StandardNormal)).collect();
            let scale = 1.0 / k as f64;
            DenseSymmetric::from_upper(m, |i, j| {
                let (gi, gj) = (&g[i * k..(i + 1) * k], &g[j * k..(j + 1) * k]);
                crate::numeric::dot(gi, gj) * scale
            })
        }
        GeneratorKind::RankProjector => {
            let k = spec.k;
            // Columns stored contiguously: q[r*m..(r+1)*m].
            let mut q: Vec<f64> = (0..m * k).map(|_| rng.sample(StandardNormal)).collect();
            orthonormalize_columns(&mut q, m, k)?;
            DenseSymmetric::from_upper(m, |i, j| (0..k).map(|r| q[r * m + i] * q[r * m + j]).sum())
        }
    })
}

/// Modified Gram-Schmidt with one re-orthogonalisation pass.
fn orthonormalize_columns(q: &mut [f64], m: usize, k: usize) -> Result<()> {
    for r in 0..k {
        for _ in 0..2 {
            for s in 0..r {
                let (done, rest) = q.split_at_mut(r * m);
                let prev = &done[s * m..(s + 1) * m];
                let col = &mut rest[..m];
                let proj = crate::numeric::dot(prev, col);
                for (c, p) in col.iter_mut().zip(prev) {
                    *c -= proj * p;
                }
            }
        }
        let col = &mut q[r * m..(r + 1) * m];
        let norm = crate::numeric::dot(col, col).sqrt();
        if norm < 1e-12 {
            return Err(Error::InvalidSpec("degenerate Gaussian draw while orthonormalising".into()));
        }
        col.iter_mut().for_each(|c| *c /= norm);
    }
    Ok(())
}

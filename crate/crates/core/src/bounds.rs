//! Closed-form accuracy bounds for Hutchinson's estimator.
//!
//! Everything here is a pure function of its arguments. Each formula is
//! evaluated exactly as stated, including where two published forms
//! disagree (see [`SubGamma::tail`] versus [`tail_theorem`]); the
//! [`audit`](crate::audit) module compares them against exact oracles.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Scale of the one-shot relative error, `8/3`.
pub const HUTCHINSON_SCALE: f64 = 8.0 / 3.0;

/// Upper end of the admissible ε range, `3/8`.
pub const EPS_LIMIT: f64 = 3.0 / 8.0;

/// Sub-gamma parameters: `log E e^{tX} ≤ v t² / (2(1 − c t))` for `0 ≤ t < 1/c`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SubGamma {
    /// Variance factor.
    pub v: f64,
    /// Scale.
    pub c: f64,
}

impl SubGamma {
    pub fn new(v: f64, c: f64) -> Result<Self> {
        if v >= 0.0 && c >= 0.0 && v.is_finite() && c.is_finite() {
            Ok(Self { v, c })
        } else {
            Err(Error::domain(format!("sub-gamma parameters must be finite and non-negative, got v={v}, c={c}")))
        }
    }

    /// `Γ(1, 8/3)`, the class of the one-shot relative error.
    pub fn one_shot() -> Self {
        Self { v: 1.0, c: HUTCHINSON_SCALE }
    }

    /// `Γ(1/n, 8/3)`, the class stated for the n-sample relative error.
    pub fn n_sample(n: u64) -> Result<Self> {
        if n == 0 {
            return Err(Error::domain("sample count n must be at least 1"));
        }
        Ok(Self { v: 1.0 / n as f64, c: HUTCHINSON_SCALE })
    }

    /// `v t² / (2(1 − c t))`.
    pub fn mgf_envelope(&self, t: f64) -> Result<f64> {
        if !(t >= 0.0) {
            return Err(Error::domain(format!("MGF argument t must be non-negative, got {t}")));
        }
        if self.c > 0.0 && self.c * t >= 1.0 {
            return Err(Error::domain(format!("MGF argument t={t} must be below 1/c = {}", 1.0 / self.c)));
        }
        Ok(self.v * t * t / (2.0 * (1.0 - self.c * t)))
    }

    /// Tail bound `exp(−ε² / (v + c ε))`.
    ///
    /// At `ε = 0` the bound is 1. With `v = c = 0` the variable is a.s. zero
    /// and the bound is 0 for every `ε > 0`.
    pub fn tail(&self, eps: f64) -> Result<f64> {
        if !(eps >= 0.0) {
            return Err(Error::domain(format!("ε must be non-negative, got {eps}")));
        }
        if eps == 0.0 {
            return Ok(1.0);
        }
        let denom = self.v + self.c * eps;
        if denom == 0.0 {
            return Ok(0.0);
        }
        Ok((-eps * eps / denom).exp())
    }

    /// Class of `aX`: substituting `t → a t` gives `(a² v, a c)`.
    pub fn scale(&self, a: f64) -> Result<Self> {
        if !(a > 0.0) || !a.is_finite() {
            return Err(Error::domain(format!("scale factor must be positive, got {a}")));
        }
        Ok(Self { v: a * a * self.v, c: a * self.c })
    }

    /// Class of a sum of independent variables: `(Σ vᵢ, max cᵢ)`.
    pub fn sum(parts: &[SubGamma]) -> Result<Self> {
        let first = parts.first().ok_or(Error::EmptyList)?;
        Ok(parts[1..].iter().fold(*first, |acc, p| Self { v: acc.v + p.v, c: acc.c.max(p.c) }))
    }
}

/// `‖err‖_d ≤ d − 1` for the one-shot relative error.
pub fn moment_bound(d: u32) -> Result<f64> {
    if d < 2 {
        return Err(Error::domain(format!("moment order d must be at least 2, got {d}")));
    }
    Ok(f64::from(d - 1))
}

fn check_eps(eps: f64) -> Result<()> {
    if eps > 0.0 && eps < EPS_LIMIT {
        Ok(())
    } else {
        Err(Error::domain(format!("ε must satisfy 0 < ε < 3/8, got {eps}")))
    }
}

fn check_delta(delta: f64) -> Result<()> {
    if delta > 0.0 && delta < 1.0 {
        Ok(())
    } else {
        Err(Error::domain(format!("δ must satisfy 0 < δ < 1, got {delta}")))
    }
}

/// n-sample tail `exp(−n ε² / (2(1 − (8/3) ε)))`, for `0 < ε < 3/8`.
///
/// With `n = 1` this is the one-shot tail. The exponent is `n` times the
/// `Γ(1, 8/3)` MGF envelope evaluated at `t = ε`.
pub fn tail_theorem(eps: f64, n: u64) -> Result<f64> {
    check_eps(eps)?;
    if n == 0 {
        return Err(Error::domain("sample count n must be at least 1"));
    }
    let exponent = SubGamma::one_shot().mgf_envelope(eps)?;
    Ok((-(n as f64) * exponent).exp())
}

/// Sample-size formulas.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    /// `2(1 − 8ε/3) ln(1/δ) / ε²`.
    ThisWork,
    /// `6 ln(2/δ) / ε²`.
    Roosta,
    /// `(6 ln(2/δ) + 6 rank) / ε²`, the tabulated form.
    AvronTable,
    /// `(6 ln(1/δ) + 6 ln rank) / ε²`, the form behind the comparison plot.
    AvronFig,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::ThisWork, Method::Roosta, Method::AvronTable, Method::AvronFig];

    pub fn id(self) -> &'static str {
        match self {
            Method::ThisWork => "this-work",
            Method::Roosta => "roosta",
            Method::AvronTable => "avron-table",
            Method::AvronFig => "avron-fig",
        }
    }

    pub fn needs_rank(self) -> bool {
        matches!(self, Method::AvronTable | Method::AvronFig)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.id() == s)
            .ok_or_else(|| Error::domain(format!("unknown method `{s}` (expected this-work, roosta, avron-table or avron-fig)")))
    }
}

/// Planning inputs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundQuery {
    pub eps: f64,
    pub delta: f64,
    /// Only consulted by the Avron–Toledo formulas.
    pub rank: Option<u64>,
}

impl BoundQuery {
    pub fn new(eps: f64, delta: f64) -> Self {
        Self { eps, delta, rank: None }
    }

    pub fn with_rank(mut self, rank: u64) -> Self {
        self.rank = Some(rank);
        self
    }
}

/// Real-valued formula behind [`sample_size`], before rounding.
pub fn sample_size_real(q: &BoundQuery, method: Method) -> Result<f64> {
    check_delta(q.delta)?;
    match method {
        Method::ThisWork => check_eps(q.eps)?,
        _ if !(q.eps > 0.0) || !q.eps.is_finite() => {
            return Err(Error::domain(format!("ε must be positive, got {}", q.eps)))
        }
        _ => {}
    }
    let rank = if method.needs_rank() {
        match q.rank {
            Some(r) if r >= 1 => r as f64,
            _ => return Err(Error::domain(format!("method {method} needs rank ≥ 1"))),
        }
    } else {
        0.0
    };
    let (eps, delta) = (q.eps, q.delta);
    let eps2 = eps * eps;
    Ok(match method {
        Method::ThisWork => 2.0 * (1.0 - HUTCHINSON_SCALE * eps) * -delta.ln() / eps2,
        Method::Roosta => 6.0 * (2.0 / delta).ln() / eps2,
        Method::AvronTable => (6.0 * (2.0 / delta).ln() + 6.0 * rank) / eps2,
        Method::AvronFig => (6.0 * -delta.ln() + 6.0 * rank.ln()) / eps2,
    })
}

/// Smallest integer at or above the formula value, and at least 1.
pub fn sample_size(q: &BoundQuery, method: Method) -> Result<u64> {
    let n = sample_size_real(q, method)?.ceil();
    if n > u64::MAX as f64 {
        return Err(Error::domain("planned sample size does not fit in 64 bits"));
    }
    Ok((n as u64).max(1))
}

/// Coefficient `a_d = (d − 1)^d / d!` of the MGF envelope series.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnvelopeSeries;

impl EnvelopeSeries {
    /// `ln a_d`.
    pub fn ln_coefficient(d: u32) -> f64 {
        debug_assert!(d >= 2);
        f64::from(d) * f64::from(d - 1).ln() - ln_factorial(d)
    }

    pub fn coefficient(d: u32) -> Result<f64> {
        if d < 2 {
            return Err(Error::domain(format!("series order d must be at least 2, got {d}")));
        }
        if d <= 20 {
            // Exact integer factorial below 2^53 keeps small orders correctly rounded.
            let fact: f64 = (1..=d).map(f64::from).product();
            Ok(f64::from(d - 1).powi(d as i32) / fact)
        } else {
            Ok(Self::ln_coefficient(d).exp())
        }
    }
}

fn ln_factorial(d: u32) -> f64 {
    (2..=d).map(|k| f64::from(k).ln()).sum()
}

/// `a_{d+1} / a_d = d^{d+1} / ((d − 1)^d (d + 1))`.
pub fn taylor_ratio(d: u32) -> Result<f64> {
    if d < 2 {
        return Err(Error::domain(format!("ratio order d must be at least 2, got {d}")));
    }
    let df = f64::from(d);
    if d <= 64 {
        // (d / (d−1))^d is exact for d = 2 and accurate to a few ulps below 64.
        let base = df / (df - 1.0);
        Ok(df * base.powi(d as i32) / (df + 1.0))
    } else {
        // ln ratio = ln d − d · ln(1 − 1/d) − ln(d + 1).
        let ln = df.ln() - df * (-1.0 / df).ln_1p() - (df + 1.0).ln();
        Ok(ln.exp())
    }
}

/// `1 + Σ_{d=2}^{D} t^d (d − 1)^d / d!`, terms evaluated in log-space.
pub fn mgf_series_partial(t: f64, max_order: u32) -> Result<f64> {
    if !(t >= 0.0) {
        return Err(Error::domain(format!("series argument t must be non-negative, got {t}")));
    }
    if max_order < 2 {
        return Err(Error::domain(format!("series order D must be at least 2, got {max_order}")));
    }
    let mut sum = 1.0;
    if t == 0.0 {
        return Ok(sum);
    }
    let ln_t = t.ln();
    let mut ln_fact = 2.0_f64.ln();
    for d in 2..=max_order {
        if d > 2 {
            ln_fact += f64::from(d).ln();
        }
        let ln_term = f64::from(d) * (ln_t + f64::from(d - 1).ln()) - ln_fact;
        let term = ln_term.exp();
        if !term.is_finite() {
            return Err(Error::Overflow { order: d });
        }
        sum += term;
        if !sum.is_finite() {
            return Err(Error::Overflow { order: d });
        }
    }
    Ok(sum)
}

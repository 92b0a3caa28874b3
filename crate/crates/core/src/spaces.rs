//! Sequence spaces: `ℓ_p`, Lorentz `ℓ_{p,q}`, weighted Lorentz `d_{1,q}(w)`.
//!
//! Lorentz norms act on the non-increasing rearrangement `a` of `|f|`:
//!
//! * `‖f‖_{p,q} = (Σ (n^{1/p} a_n)^q / n)^{1/q}`,
//! * `‖f‖_{d_{1,q}(w)} = (Σ (s_n a_n)^q w_n / s_n)^{1/q}` with `s_n = w_1 + … + w_n`,
//!
//! and by `sup` when `q = ∞`. With this normalization
//! `‖Σ_{n≤m} n^{-1/p} e_n‖_{p,q} = H_m^{1/q}` holds exactly.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Positive weight with its primitive sequence `s_n = Σ_{k≤n} w_k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "WeightSeqRaw", into = "WeightSeqRaw")]
pub struct WeightSeq {
    w: Vec<f64>,
    s: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct WeightSeqRaw {
    w: Vec<f64>,
}

impl TryFrom<WeightSeqRaw> for WeightSeq {
    type Error = Error;
    fn try_from(r: WeightSeqRaw) -> Result<Self> {
        WeightSeq::new(r.w)
    }
}

impl From<WeightSeq> for WeightSeqRaw {
    fn from(w: WeightSeq) -> Self {
        WeightSeqRaw { w: w.w }
    }
}

impl WeightSeq {
    pub fn new(w: Vec<f64>) -> Result<Self> {
        if w.is_empty() || w.iter().any(|&x| !(x > 0.0 && x.is_finite())) {
            return Err(Error::InvalidParameter("weights must be positive and finite".into()));
        }
        let mut s = Vec::with_capacity(w.len());
        let mut acc = 0.0;
        for &x in &w {
            acc += x;
            s.push(acc);
        }
        Ok(WeightSeq { w, s })
    }

    /// `w_n = n^{1/p} - (n-1)^{1/p}`, so that `s_n = n^{1/p}`.
    pub fn lorentz(p: f64, len: usize) -> Result<Self> {
        if !(p > 0.0 && p.is_finite()) {
            return Err(Error::InvalidParameter(format!("p = {p}")));
        }
        let e = 1.0 / p;
        Self::new((1..=len).map(|n| (n as f64).powf(e) - ((n - 1) as f64).powf(e)).collect())
    }

    /// `w_n = n^e`.
    pub fn power(e: f64, len: usize) -> Result<Self> {
        Self::new((1..=len).map(|n| (n as f64).powf(e)).collect())
    }

    /// Parses `n,w_n` CSV lines (an optional non-numeric header is skipped).
    pub fn from_csv(text: &str) -> Result<Self> {
        let mut w = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let (n, v) = line.split_once(',').ok_or_else(|| Error::Parse(format!("line {}: {line:?}", i + 1)))?;
            let Ok(n) = n.trim().parse::<usize>() else {
                if i == 0 {
                    continue;
                }
                return Err(Error::Parse(format!("line {}: bad index {n:?}", i + 1)));
            };
            if n != w.len() + 1 {
                return Err(Error::Parse(format!("line {}: expected index {}, found {n}", i + 1, w.len() + 1)));
            }
            w.push(v.trim().parse::<f64>().map_err(|e| Error::Parse(format!("line {}: {e}", i + 1)))?);
        }
        Self::new(w)
    }

    pub fn len(&self) -> usize {
        self.w.len()
    }

    pub fn is_empty(&self) -> bool {
        self.w.is_empty()
    }

    /// `w_n`, 1-based.
    pub fn w(&self, n: usize) -> f64 {
        self.w[n - 1]
    }

    /// `s_n`, 1-based; `s_0 = 0`.
    pub fn s(&self, n: usize) -> f64 {
        if n == 0 { 0.0 } else { self.s[n - 1] }
    }

    pub fn primitive(&self) -> &[f64] {
        &self.s
    }

    /// `max_{2m ≤ len} s_{2m}/s_m`.
    pub fn doubling_constant(&self) -> f64 {
        (1..=self.len() / 2).map(|m| self.s(2 * m) / self.s(m)).fold(1.0, f64::max)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SpaceSpec {
    Lp { p: f64 },
    Lorentz { p: f64, q: f64 },
    WeightedLorentz { weight: Arc<WeightSeq>, q: f64 },
}

fn check_q(q: f64) -> Result<()> {
    if !(q > 0.0) || q.is_nan() {
        return Err(Error::InvalidParameter(format!("q = {q}")));
    }
    Ok(())
}

impl SpaceSpec {
    pub fn lp(p: f64) -> Self {
        SpaceSpec::Lp { p }
    }

    pub fn lorentz(p: f64, q: f64) -> Self {
        SpaceSpec::Lorentz { p, q }
    }

    pub fn weighted(weight: WeightSeq, q: f64) -> Self {
        SpaceSpec::WeightedLorentz { weight: Arc::new(weight), q }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            SpaceSpec::Lp { p } => {
                if !(*p > 0.0) || p.is_nan() {
                    return Err(Error::InvalidParameter(format!("p = {p}")));
                }
            }
            SpaceSpec::Lorentz { p, q } => {
                if !(*p > 0.0 && p.is_finite()) {
                    return Err(Error::InvalidParameter(format!("p = {p}")));
                }
                check_q(*q)?;
            }
            SpaceSpec::WeightedLorentz { q, .. } => check_q(*q)?,
        }
        Ok(())
    }

    /// Parses `lp:p`, `lorentz:p,q` or `wlorentz:<weightfile>,q` (`inf` allowed).
    pub fn parse(text: &str) -> Result<Self> {
        let (kind, rest) = text.split_once(':').ok_or_else(|| Error::Parse(format!("space {text:?}")))?;
        let num = |s: &str| -> Result<f64> {
            match s.trim() {
                "inf" | "∞" => Ok(f64::INFINITY),
                t => t.parse().map_err(|e| Error::Parse(format!("{t:?}: {e}"))),
            }
        };
        let spec = match kind.trim() {
            "lp" => SpaceSpec::Lp { p: num(rest)? },
            "lorentz" => {
                let (p, q) = rest.split_once(',').ok_or_else(|| Error::Parse(format!("lorentz needs p,q: {rest:?}")))?;
                SpaceSpec::Lorentz { p: num(p)?, q: num(q)? }
            }
            "wlorentz" => {
                let (path, q) = rest.rsplit_once(',').ok_or_else(|| Error::Parse(format!("wlorentz needs file,q: {rest:?}")))?;
                let text = std::fs::read_to_string(path.trim())?;
                SpaceSpec::WeightedLorentz { weight: Arc::new(WeightSeq::from_csv(&text)?), q: num(q)? }
            }
            k => return Err(Error::Parse(format!("unknown space kind {k:?}"))),
        };
        spec.validate()?;
        Ok(spec)
    }
}

impl fmt::Display for SpaceSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let g = |x: f64| if x.is_infinite() { "inf".to_string() } else { format!("{x}") };
        match self {
            SpaceSpec::Lp { p } => write!(f, "lp:{}", g(*p)),
            SpaceSpec::Lorentz { p, q } => write!(f, "lorentz:{},{}", g(*p), g(*q)),
            SpaceSpec::WeightedLorentz { weight, q } => write!(f, "wlorentz:<{} weights>,{}", weight.len(), g(*q)),
        }
    }
}

/// Non-increasing rearrangement of `|f|`.
pub fn rearrange(f: &[f64]) -> Vec<f64> {
    let mut a: Vec<f64> = f.iter().map(|x| x.abs()).collect();
    a.sort_by(|x, y| y.total_cmp(x));
    a
}

/// `(Σ_n (g_n a_n)^q μ_n)^{1/q}`, or `sup g_n a_n` for `q = ∞`, scaled against overflow.
fn weighted_q_sum(a: &[f64], q: f64, g: impl Fn(usize) -> f64, mu: impl Fn(usize) -> f64) -> f64 {
    if q.is_infinite() {
        return a.iter().enumerate().map(|(i, &x)| g(i + 1) * x).fold(0.0, f64::max);
    }
    let scale = a.first().copied().unwrap_or(0.0);
    if scale == 0.0 {
        return 0.0;
    }
    let mut s = 0.0;
    for (i, &x) in a.iter().enumerate() {
        if x == 0.0 {
            break;
        }
        s += (g(i + 1) * x / scale).powf(q) * mu(i + 1);
    }
    scale * s.powf(1.0 / q)
}

pub fn space_norm(spec: &SpaceSpec, f: &[f64]) -> Result<f64> {
    spec.validate()?;
    Ok(match spec {
        SpaceSpec::Lp { p } => {
            let scale = f.iter().fold(0.0f64, |m, x| m.max(x.abs()));
            if p.is_infinite() || scale == 0.0 {
                scale
            } else {
                scale * f.iter().map(|x| (x.abs() / scale).powf(*p)).sum::<f64>().powf(1.0 / p)
            }
        }
        SpaceSpec::Lorentz { p, q } => {
            let a = rearrange(f);
            let e = 1.0 / p;
            weighted_q_sum(&a, *q, |n| (n as f64).powf(e), |n| 1.0 / n as f64)
        }
        SpaceSpec::WeightedLorentz { weight, q } => {
            let a = rearrange(f);
            let support = a.iter().take_while(|&&x| x > 0.0).count();
            if support > weight.len() {
                return Err(Error::DimensionMismatch { expected: weight.len(), found: support });
            }
            weighted_q_sum(&a, *q, |n| weight.s(n), |n| weight.w(n) / weight.s(n))
        }
    })
}

/// The three equivalent forms of the `d_{1,q}(w)` quasi-norm.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NormVariants {
    /// `(Σ (s_n a_n)^q w_n/s_n)^{1/q}`.
    pub defining: f64,
    /// `(Σ (s_n a_n)^q / n)^{1/q}`.
    pub lrp_form: f64,
    /// `(Σ a_n^q (s_n^q - s_{n-1}^q))^{1/q}`.
    pub increment_form: f64,
}

pub fn norm_variants(w: &WeightSeq, q: f64, f: &[f64]) -> Result<NormVariants> {
    check_q(q)?;
    let a = rearrange(f);
    let support = a.iter().take_while(|&&x| x > 0.0).count();
    if support > w.len() {
        return Err(Error::DimensionMismatch { expected: w.len(), found: support });
    }
    let defining = weighted_q_sum(&a, q, |n| w.s(n), |n| w.w(n) / w.s(n));
    let lrp_form = weighted_q_sum(&a, q, |n| w.s(n), |n| 1.0 / n as f64);
    let increment_form = if q.is_infinite() {
        defining
    } else {
        weighted_q_sum(&a, q, |_| 1.0, |n| w.s(n).powf(q) - w.s(n - 1).powf(q))
    };
    Ok(NormVariants { defining, lrp_form, increment_form })
}

/// `H_m = Σ_{n≤m} 1/n`.
pub fn harmonic(m: usize) -> f64 {
    // Summing small terms first keeps the partial sums exact to a few ulps.
    (1..=m).rev().map(|n| 1.0 / n as f64).sum()
}

/// `H_m[w] = Σ_{n≤m} w_n/s_n`.
pub fn harmonic_w(w: &WeightSeq, m: usize) -> Result<f64> {
    if m > w.len() {
        return Err(Error::DimensionMismatch { expected: m, found: w.len() });
    }
    Ok((1..=m).rev().map(|n| w.w(n) / w.s(n)).sum())
}

fn inv(x: f64) -> f64 {
    if x.is_infinite() { 0.0 } else { 1.0 / x }
}

/// `δ_m` between two spaces of the same family with `q ≤ r`.
pub fn delta_closed_form(u1: &SpaceSpec, u2: &SpaceSpec, m: usize) -> Result<f64> {
    u1.validate()?;
    u2.validate()?;
    let unsupported = || Error::UnsupportedPair(format!("({u1}, {u2})"));
    let (q, r, base) = match (u1, u2) {
        (SpaceSpec::Lp { p: q }, SpaceSpec::Lp { p: r }) => (*q, *r, m as f64),
        (SpaceSpec::Lorentz { p: p1, q }, SpaceSpec::Lorentz { p: p2, q: r }) if p1 == p2 => (*q, *r, harmonic(m)),
        (SpaceSpec::WeightedLorentz { weight: w1, q }, SpaceSpec::WeightedLorentz { weight: w2, q: r }) if w1 == w2 => {
            (*q, *r, harmonic_w(w1, m)?)
        }
        _ => return Err(unsupported()),
    };
    if q > r {
        return Err(unsupported());
    }
    Ok(base.powf(inv(q) - inv(r)))
}

/// One row of the fundamental-function table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FundamentalRow {
    pub m: usize,
    /// `Λ_m = ‖Σ_{j≤m} e_j‖`.
    pub lambda: f64,
    /// `Γ_m = sup{Σ_{j≤m} g_j : ‖g‖ ≤ 1}`.
    pub gamma: f64,
    /// `c_m = Λ_m Γ_m / m`, which lies in `[1, 2]`.
    pub c: f64,
}

/// Fundamental functions for `k = 1..=m`.
pub fn fundamental_table(spec: &SpaceSpec, m: usize) -> Result<Vec<FundamentalRow>> {
    spec.validate()?;
    let mut rows = Vec::with_capacity(m);
    let mut best_step: f64 = 0.0;
    for k in 1..=m {
        let lam = space_norm(spec, &vec![1.0; k])?;
        best_step = best_step.max(k as f64 / lam);
        let gamma = match spec {
            SpaceSpec::Lp { p } if *p >= 1.0 => (k as f64).powf(1.0 - inv(*p)),
            // Step vectors g = Λ_j^{-1} 1_{[1..j]}, j ≤ k.
            _ => best_step,
        };
        rows.push(FundamentalRow { m: k, lambda: lam, gamma, c: lam * gamma / k as f64 });
    }
    Ok(rows)
}

pub fn fundamental(spec: &SpaceSpec, m: usize) -> Result<FundamentalRow> {
    if m == 0 {
        return Err(Error::InvalidParameter("m must be at least 1".into()));
    }
    Ok(*fundamental_table(spec, m)?.last().unwrap())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Regularity {
    /// Lower regularity: `s_{rm} ≥ 2 s_m`.
    Lrp,
    /// Upper regularity: `s_{rm} ≤ (r/2) s_m`.
    Urp,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum RegularityResult {
    Witness { r: usize },
    /// No `r ≤ r_max` works; `m` violates the condition at `r = r_max`.
    Failure { r_max: usize, m: usize },
}

/// Smallest `r` in `2..=cap` for which the condition holds at every `m` with `rm ≤ len`.
/// `s[0]` is `s_1`.
pub fn regularity_check(s: &[f64], kind: Regularity, cap: usize) -> Result<RegularityResult> {
    if cap < 2 || s.len() < 2 {
        return Err(Error::InvalidParameter("need cap ≥ 2 and at least two terms".into()));
    }
    let holds = |r: usize, m: usize| {
        let (a, b) = (s[r * m - 1], s[m - 1]);
        match kind {
            Regularity::Lrp => a >= 2.0 * b,
            Regularity::Urp => a <= 0.5 * r as f64 * b,
        }
    };
    let mut last = RegularityResult::Failure { r_max: 1, m: 1 };
    for r in 2..=cap {
        if r > s.len() {
            break;
        }
        match (1..=s.len() / r).find(|&m| !holds(r, m)) {
            None => return Ok(RegularityResult::Witness { r }),
            Some(m) => last = RegularityResult::Failure { r_max: r, m },
        }
    }
    Ok(last)
}

/// `sup_{n>m} (φ_n^q/n) / (φ_m^q/m)`; 1 when there is a single term.
pub fn essential_decrease_check(phi: &[f64], q: f64) -> Result<f64> {
    if phi.iter().any(|&x| !(x > 0.0)) {
        return Err(Error::InvalidParameter("φ must be positive".into()));
    }
    check_q(q)?;
    let g = |i: usize| phi[i].powf(q) / (i + 1) as f64;
    let mut best: f64 = 1.0;
    let mut min_prev = f64::INFINITY;
    for i in 0..phi.len() {
        if i > 0 {
            best = best.max(g(i) / min_prev);
        }
        min_prev = min_prev.min(g(i));
    }
    Ok(best)
}

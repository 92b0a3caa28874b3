//! Conditionality measurements: projection norms, `k_m`, `k̃_m`, `δ_m`, `δ̃_m`,
//! fundamental functions, series-transform constants and greedy ratios.
//!
//! Gram-backed systems give exact projection norms through
//! `‖S_A‖² = λ_max((G⁻¹)_{AA} G_{AA})`; every other oracle yields lower witnesses.

use std::fmt::Write as _;
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::fmt17;
use crate::linalg::{cholesky, gen_sym_eig_extremes, sym_eigvals, SymMatrix};
use crate::spaces::{delta_closed_form, space_norm, SpaceSpec};
use crate::systems::{FiniteSystem, Oracle};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Kind {
    Exact,
    LowerWitness,
    UpperEnvelope,
}

impl Kind {
    pub fn as_str(self) -> &'static str {
        match self {
            Kind::Exact => "exact",
            Kind::LowerWitness => "lower_witness",
            Kind::UpperEnvelope => "upper_envelope",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "exact" => Ok(Kind::Exact),
            "lower_witness" => Ok(Kind::LowerWitness),
            "upper_envelope" => Ok(Kind::UpperEnvelope),
            _ => Err(Error::Parse(format!("kind {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Measured {
    pub value: f64,
    pub kind: Kind,
}

/// A test vector with the ratio it achieves.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Witness {
    pub support: Vec<usize>,
    pub coeffs: Vec<f64>,
    pub ratio: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GrowthEntry {
    pub m: usize,
    pub value: f64,
    pub kind: Kind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrowthSeries {
    pub quantity: String,
    pub system: String,
    pub entries: Vec<GrowthEntry>,
}

impl GrowthSeries {
    pub fn new(quantity: impl Into<String>, system: impl Into<String>) -> Self {
        GrowthSeries { quantity: quantity.into(), system: system.into(), entries: Vec::new() }
    }

    /// Appends an entry; `m` must not decrease, and must increase within a kind.
    pub fn push(&mut self, m: usize, value: f64, kind: Kind) -> Result<()> {
        if let Some(last) = self.entries.last() {
            if m < last.m {
                return Err(Error::InvalidParameter(format!("m = {m} after {}", last.m)));
            }
        }
        if self.entries.iter().any(|e| e.kind == kind && e.m == m) {
            return Err(Error::InvalidParameter(format!("duplicate {} entry at m = {m}", kind.as_str())));
        }
        self.entries.push(GrowthEntry { m, value, kind });
        Ok(())
    }

    pub fn of_kind(&self, kind: Kind) -> Vec<(usize, f64)> {
        self.entries.iter().filter(|e| e.kind == kind).map(|e| (e.m, e.value)).collect()
    }

    /// Points usable for exponent fits: exact and lower-witness values, larger one per `m`.
    pub fn fit_points(&self) -> Vec<(f64, f64)> {
        let mut out: Vec<(f64, f64)> = Vec::new();
        for e in self.entries.iter().filter(|e| e.kind != Kind::UpperEnvelope) {
            match out.last_mut() {
                Some(last) if last.0 == e.m as f64 => last.1 = last.1.max(e.value),
                _ => out.push((e.m as f64, e.value)),
            }
        }
        out
    }

    pub fn csv_header() -> &'static str {
        "quantity,system,m,value,kind"
    }

    /// Rows without a header.
    pub fn csv_rows(&self) -> String {
        let mut s = String::new();
        let sys = csv_field(&self.system);
        for e in &self.entries {
            let _ = writeln!(s, "{},{},{},{},{}", csv_field(&self.quantity), sys, e.m, fmt17(e.value), e.kind.as_str());
        }
        s
    }

    pub fn to_csv(&self) -> String {
        format!("{}\n{}", Self::csv_header(), self.csv_rows())
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Enumeration caps and search budgets.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SearchConfig {
    pub restarts: usize,
    pub budget: usize,
    /// Largest `m` for exact `k̃_m` (all `A ⊆ [m]`).
    pub ktilde_exact_cap: usize,
    /// Largest dimension for exact `k_m`.
    pub k_exact_dim_cap: usize,
    /// Largest number of subsets any exact enumeration may visit.
    pub enumeration_cap: u128,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig { restarts: 32, budget: 10_000, ktilde_exact_cap: 18, k_exact_dim_cap: 24, enumeration_cap: 1 << 25 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum Mode {
    Exact,
    Heuristic { seed: u64 },
}

/// Precomputed `G` and `G⁻¹` for exact projection norms.
#[derive(Debug, Clone)]
pub struct GramPencil {
    g: Arc<SymMatrix>,
    h: SymMatrix,
}

impl GramPencil {
    pub fn new(g: Arc<SymMatrix>) -> Result<Self> {
        let h = cholesky(&g)?.inverse();
        Ok(GramPencil { g, h })
    }

    /// Pencil on the leading `m` coordinates.
    pub fn leading(g: &SymMatrix, m: usize) -> Result<Self> {
        Self::new(Arc::new(g.leading(m)))
    }

    pub fn order(&self) -> usize {
        self.g.order()
    }

    /// `‖S_A‖²` on the span of all coordinates of the pencil.
    pub fn norm_sq(&self, a: &[usize]) -> Result<f64> {
        match a.len() {
            0 => Ok(0.0),
            1 => Ok(self.h.get(a[0], a[0]) * self.g.get(a[0], a[0])),
            k if k == self.order() => Ok(1.0),
            k => {
                // λ(H G) = λ(Lᵀ G L) for H = L Lᵀ.
                let l = cholesky(&self.h.submatrix(a))?;
                let gs = self.g.submatrix(a);
                let mut gl = vec![0.0; k * k];
                for i in 0..k {
                    for j in 0..k {
                        let mut s = 0.0;
                        for t in j..k {
                            s += gs.get(i, t) * l.get(t, j);
                        }
                        gl[i * k + j] = s;
                    }
                }
                let m = SymMatrix::from_fn(k, |i, j| {
                    let mut s = 0.0;
                    for t in i..k {
                        s += l.get(t, i) * gl[t * k + j];
                    }
                    s
                });
                Ok(sym_eigvals(&m)?[0])
            }
        }
    }
}

/// `‖S_A‖` through the pencil `(D_A G D_A, G)`.
pub fn projection_norm_pencil(g: &SymMatrix, a: &[usize]) -> Result<f64> {
    let n = g.order();
    let mut ind = vec![0.0; n];
    for &i in a {
        ind[i] = 1.0;
    }
    let m = SymMatrix::from_fn(n, |i, j| ind[i] * ind[j] * g.get(i, j));
    Ok(crate::linalg::gen_sym_eig_max(&m, g)?.max(0.0).sqrt())
}

fn check_set(sys: &FiniteSystem, a: &[usize]) -> Result<()> {
    if let Some(&i) = a.iter().find(|&&i| i >= sys.dim()) {
        return Err(Error::DimensionMismatch { expected: sys.dim(), found: i + 1 });
    }
    Ok(())
}

/// `‖S_A‖`: exact for Gram systems, otherwise the best ratio over a witness battery.
pub fn projection_norm(sys: &FiniteSystem, a: &[usize], seed: u64) -> Result<Measured> {
    check_set(sys, a)?;
    if a.is_empty() {
        return Ok(Measured { value: 0.0, kind: Kind::Exact });
    }
    if let Some(g) = sys.gram() {
        let v = GramPencil::new(g)?.norm_sq(a)?.sqrt().max(1.0);
        return Ok(Measured { value: v, kind: Kind::Exact });
    }
    let w = projection_witness(sys, a, sys.dim(), seed, SearchConfig::default().budget / 10)?;
    Ok(Measured { value: w.ratio.max(1.0), kind: Kind::LowerWitness })
}

fn restrict(f: &[f64], a: &[usize]) -> Vec<f64> {
    let mut out = vec![0.0; f.len()];
    for &i in a {
        if i < f.len() {
            out[i] = f[i];
        }
    }
    out
}

fn ratio_of(sys: &FiniteSystem, f: &[f64], a: &[usize]) -> Result<f64> {
    let d = sys.norm(f)?;
    if d == 0.0 {
        return Ok(0.0);
    }
    Ok(sys.norm(&restrict(f, a))? / d)
}

/// Lower bound for `‖S_A‖` over vectors supported in the first `span` coordinates.
pub fn projection_witness(sys: &FiniteSystem, a: &[usize], span: usize, seed: u64, budget: usize) -> Result<Witness> {
    check_set(sys, a)?;
    let span = span.min(sys.dim());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut starts: Vec<Vec<f64>> = vec![vec![1.0; span]];
    let mut alt = vec![1.0; span];
    for &i in a.iter().filter(|&&i| i < span) {
        alt[i] = -1.0;
    }
    starts.push(alt);
    for _ in 0..4 {
        starts.push((0..span).map(|_| if rng.gen_bool(0.5) { 1.0 } else { -1.0 }).collect());
        starts.push((0..span).map(|_| rng.gen_range(-1.0..1.0)).collect());
    }
    let mut best = Witness { support: a.to_vec(), coeffs: vec![0.0; span], ratio: 0.0 };
    let mut evals = 0usize;
    for f in &starts {
        let r = ratio_of(sys, f, a)?;
        evals += 2;
        if r > best.ratio {
            best.coeffs = f.clone();
            best.ratio = r;
        }
    }
    // Coordinate ascent from the best start.
    let mut f = best.coeffs.clone();
    let mut cur = best.ratio;
    let mut step = 0.5;
    let mut order: Vec<usize> = (0..span).collect();
    while evals < budget && step > 1e-3 {
        let mut improved = false;
        order.shuffle(&mut rng);
        for &j in &order {
            if evals >= budget {
                break;
            }
            for &t in &[step, -step] {
                let old = f[j];
                f[j] = old + t;
                let r = ratio_of(sys, &f, a)?;
                evals += 2;
                if r > cur {
                    cur = r;
                    improved = true;
                    break;
                }
                f[j] = old;
            }
        }
        if !improved {
            step *= 0.5;
        }
    }
    if cur > best.ratio {
        best.coeffs = f;
        best.ratio = cur;
    }
    Ok(best)
}

fn mask_to_set(mask: u64) -> Vec<usize> {
    (0..64).filter(|&i| mask >> i & 1 == 1).collect()
}

fn check_budget(needed: u128, cap: u128) -> Result<()> {
    if needed > cap {
        return Err(Error::BudgetExceeded { needed, cap });
    }
    Ok(())
}

fn binomial_sum(n: usize, m: usize) -> u128 {
    let mut total = 0u128;
    let mut c = 1u128;
    for j in 0..=m.min(n) {
        total += c;
        c = c * (n - j) as u128 / (j + 1) as u128;
    }
    total
}

fn gram_or_err(sys: &FiniteSystem) -> Result<Arc<SymMatrix>> {
    sys.gram().ok_or_else(|| Error::IncompatibleOracles(format!("exact mode needs a Gram system: {}", sys.label())))
}

/// Exact `k̃_m` for `m = 1..=m_max`: max `‖S_A‖` over `A ⊆ [m]` on the span of `[m]`.
pub fn ktilde_exact_series(sys: &FiniteSystem, m_max: usize, cfg: &SearchConfig) -> Result<Vec<f64>> {
    let g = gram_or_err(sys)?;
    if m_max > sys.dim() {
        return Err(Error::DimensionMismatch { expected: sys.dim(), found: m_max });
    }
    if m_max > cfg.ktilde_exact_cap {
        return Err(Error::BudgetExceeded { needed: 1u128 << m_max, cap: 1u128 << cfg.ktilde_exact_cap });
    }
    check_budget((1u128 << (m_max + 1)) - 2, cfg.enumeration_cap)?;
    let mut out = Vec::with_capacity(m_max);
    let mut running: f64 = 1.0;
    for m in 1..=m_max {
        let pencil = GramPencil::leading(&g, m)?;
        // Subsets not containing m were already covered on a smaller span only, so every mask is visited.
        let best = (1u64..(1u64 << m))
            .into_par_iter()
            .map(|mask| pencil.norm_sq(&mask_to_set(mask)))
            .try_reduce(|| 0.0, |a, b| Ok(a.max(b)))?;
        running = running.max(best.sqrt());
        out.push(running);
    }
    Ok(out)
}

/// Exact `k_m` for `m = 1..=m_max`: max `‖S_A‖` over `|A| ≤ m`, on the full span.
pub fn k_exact_series(sys: &FiniteSystem, m_max: usize, cfg: &SearchConfig) -> Result<Vec<f64>> {
    let g = gram_or_err(sys)?;
    let n = sys.dim();
    if n > cfg.k_exact_dim_cap {
        return Err(Error::BudgetExceeded { needed: 1u128 << n.min(127), cap: 1u128 << cfg.k_exact_dim_cap });
    }
    let m_max = m_max.min(n);
    check_budget(binomial_sum(n, m_max), cfg.enumeration_cap)?;
    let pencil = GramPencil::new(g)?;
    let by_size = (1u64..(1u64 << n))
        .into_par_iter()
        .filter(|mask| mask.count_ones() as usize <= m_max)
        .map(|mask| -> Result<Vec<f64>> {
            let mut v = vec![0.0; m_max + 1];
            v[mask.count_ones() as usize] = pencil.norm_sq(&mask_to_set(mask))?;
            Ok(v)
        })
        .try_reduce(|| vec![0.0; m_max + 1], |a, b| Ok(a.iter().zip(&b).map(|(x, y)| x.max(*y)).collect()))?;
    let mut out = Vec::with_capacity(m_max);
    let mut running: f64 = 1.0;
    for v in by_size.iter().skip(1) {
        running = running.max(v.sqrt());
        out.push(running);
    }
    Ok(out)
}

/// Local search over subsets of `pool` with `1 ≤ |A| ≤ max_size`, maximizing `value`.
fn subset_search(
    pool: usize,
    max_size: usize,
    cfg: &SearchConfig,
    seed: u64,
    value: &(dyn Fn(&[usize]) -> Result<f64> + Sync),
) -> Result<(f64, Vec<usize>)> {
    let max_size = max_size.min(pool).max(1);
    let per_restart = (cfg.budget / cfg.restarts.max(1)).max(4);
    let results: Vec<(f64, Vec<usize>)> = (0..cfg.restarts.max(1))
        .into_par_iter()
        .map(|r| -> Result<(f64, Vec<usize>)> {
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (r as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
            let size = rng.gen_range(1..=max_size);
            let mut all: Vec<usize> = (0..pool).collect();
            all.shuffle(&mut rng);
            let mut cur: Vec<usize> = all[..size].to_vec();
            cur.sort_unstable();
            let mut cur_v = value(&cur)?;
            let mut evals = 1;
            while evals < per_restart {
                let inside: Vec<bool> = (0..pool).map(|i| cur.binary_search(&i).is_ok()).collect();
                let outside: Vec<usize> = (0..pool).filter(|&i| !inside[i]).collect();
                let mut moves: Vec<Vec<usize>> = Vec::new();
                if cur.len() < max_size {
                    for &j in &outside {
                        let mut s = cur.clone();
                        s.push(j);
                        moves.push(s);
                    }
                }
                if cur.len() > 1 {
                    for idx in 0..cur.len() {
                        let mut s = cur.clone();
                        s.remove(idx);
                        moves.push(s);
                    }
                }
                for _ in 0..(2 * pool).min(cur.len() * outside.len()) {
                    let mut s = cur.clone();
                    let idx = rng.gen_range(0..s.len());
                    s[idx] = outside[rng.gen_range(0..outside.len())];
                    moves.push(s);
                }
                moves.shuffle(&mut rng);
                moves.truncate((per_restart - evals).max(1));
                let mut best_move: Option<(f64, Vec<usize>)> = None;
                for mut s in moves {
                    s.sort_unstable();
                    let v = value(&s)?;
                    evals += 1;
                    if v > cur_v + 1e-15 && best_move.as_ref().is_none_or(|b| v > b.0) {
                        best_move = Some((v, s));
                    }
                }
                match best_move {
                    Some((v, s)) => {
                        cur_v = v;
                        cur = s;
                    }
                    None => break,
                }
            }
            Ok((cur_v, cur))
        })
        .collect::<Result<_>>()?;
    Ok(results.into_iter().fold((f64::NEG_INFINITY, vec![]), |a, b| if b.0 > a.0 { b } else { a }))
}

/// `k̃_m` by local search (Gram systems), a lower witness.
pub fn ktilde_heuristic(sys: &FiniteSystem, m: usize, seed: u64, cfg: &SearchConfig) -> Result<(f64, Vec<usize>)> {
    let g = gram_or_err(sys)?;
    let pencil = GramPencil::leading(&g, m.min(sys.dim()))?;
    let (v, a) = subset_search(pencil.order(), pencil.order(), cfg, seed, &|s| pencil.norm_sq(s))?;
    Ok((v.sqrt().max(1.0), a))
}

/// `k_m` by local search (Gram systems), a lower witness.
pub fn k_heuristic(sys: &FiniteSystem, m: usize, seed: u64, cfg: &SearchConfig) -> Result<(f64, Vec<usize>)> {
    let g = gram_or_err(sys)?;
    let pencil = GramPencil::new(g)?;
    let (v, a) = subset_search(sys.dim(), m, cfg, seed, &|s| pencil.norm_sq(s))?;
    Ok((v.sqrt().max(1.0), a))
}

pub fn k_measure(sys: &FiniteSystem, m: usize, mode: Mode, cfg: &SearchConfig) -> Result<GrowthEntry> {
    match mode {
        Mode::Exact => Ok(GrowthEntry { m, value: *k_exact_series(sys, m, cfg)?.last().unwrap(), kind: Kind::Exact }),
        Mode::Heuristic { seed } => Ok(GrowthEntry { m, value: k_heuristic(sys, m, seed, cfg)?.0, kind: Kind::LowerWitness }),
    }
}

pub fn ktilde_measure(sys: &FiniteSystem, m: usize, mode: Mode, cfg: &SearchConfig) -> Result<GrowthEntry> {
    if let Oracle::Dkk { .. } = sys.oracle() {
        let w = dkk_ktilde_witness(sys, m, cfg)?;
        return Ok(GrowthEntry { m, value: w.ratio, kind: Kind::LowerWitness });
    }
    match mode {
        Mode::Exact => Ok(GrowthEntry { m, value: *ktilde_exact_series(sys, m, cfg)?.last().unwrap(), kind: Kind::Exact }),
        Mode::Heuristic { seed } => Ok(GrowthEntry { m, value: ktilde_heuristic(sys, m, seed, cfg)?.0, kind: Kind::LowerWitness }),
    }
}

/// `k̃_m` witness for a DKK system from block-constant vectors: with `K` whole blocks in `[m]`,
/// `‖S_A‖` on `span{v_1..v_K}` equals the inner `‖S_{A'}‖`, so `k̃_m(Y) ≥ k̃_K(X)`.
pub fn dkk_ktilde_witness(sys: &FiniteSystem, m: usize, cfg: &SearchConfig) -> Result<Witness> {
    let Oracle::Dkk { inner, partition } = sys.oracle() else {
        return Err(Error::IncompatibleOracles(format!("not a DKK system: {}", sys.label())));
    };
    let k = partition.blocks_within(m.min(sys.dim()));
    if k == 0 {
        return Ok(Witness { support: vec![0], coeffs: vec![1.0], ratio: 1.0 });
    }
    let g = gram_or_err(inner)?;
    let pencil = GramPencil::leading(&g, k)?;
    let (best, set) = if k <= cfg.ktilde_exact_cap {
        (1u64..(1u64 << k))
            .map(|mask| Ok((pencil.norm_sq(&mask_to_set(mask))?, mask_to_set(mask))))
            .collect::<Result<Vec<_>>>()?
            .into_iter()
            .fold((0.0, vec![]), |a, b| if b.0 > a.0 { b } else { a })
    } else {
        subset_search(k, k, cfg, 0, &|s| pencil.norm_sq(s))?
    };
    // Maximizing inner coefficients, lifted to Y.
    let n = pencil.order();
    let mut ind = vec![0.0; n];
    for &i in &set {
        ind[i] = 1.0;
    }
    let gk = g.leading(k);
    let mm = SymMatrix::from_fn(n, |i, j| ind[i] * ind[j] * gk.get(i, j));
    let (_, b) = crate::linalg::gen_sym_eig_max_vec(&mm, &gk)?;
    let f = partition.synthesize(&b);
    let support: Vec<usize> = set.iter().flat_map(|&blk| partition.block(blk)).collect();
    let ratio = ratio_of(sys, &f, &support)?;
    let _ = best;
    Ok(Witness { support, coeffs: f, ratio: ratio.max(1.0) })
}

/// `δ_m` (sup over `|A| ≤ m`) or `δ̃_m` (`A ⊆ [m]`) of the identity from `S2` to `S1`:
/// `sup ‖Σ_{A} a_n x_n‖_1 / ‖Σ_{A} a_n x_n‖_2`.
pub fn delta_between(s1: &FiniteSystem, s2: &FiniteSystem, m: usize, tilde: bool, mode: Mode, cfg: &SearchConfig) -> Result<GrowthEntry> {
    if s1.dim() != s2.dim() {
        return Err(Error::DimensionMismatch { expected: s1.dim(), found: s2.dim() });
    }
    let m = m.min(s1.dim());
    if let (Oracle::Sequence(u1), Oracle::Sequence(u2)) = (s1.oracle(), s2.oracle()) {
        if let Ok(v) = delta_closed_form(u1, u2, m) {
            return Ok(GrowthEntry { m, value: v, kind: Kind::Exact });
        }
    }
    if let (Some(g1), Some(g2)) = (s1.gram(), s2.gram()) {
        let pencil_max = |a: &[usize]| -> Result<f64> { Ok(gen_sym_eig_extremes(&g1.submatrix(a), &g2.submatrix(a))?.0) };
        // The sup over a larger coordinate set is larger, so |A| = m suffices.
        if tilde {
            let a: Vec<usize> = (0..m).collect();
            return Ok(GrowthEntry { m, value: pencil_max(&a)?.sqrt(), kind: Kind::Exact });
        }
        return match mode {
            Mode::Exact => {
                let n = s1.dim();
                if n > 63 {
                    return Err(Error::BudgetExceeded { needed: u128::MAX, cap: cfg.enumeration_cap });
                }
                check_budget(binomial_sum(n, m), cfg.enumeration_cap)?;
                let best = (1u64..(1u64 << n))
                    .into_par_iter()
                    .filter(|mask| mask.count_ones() as usize == m)
                    .map(|mask| pencil_max(&mask_to_set(mask)))
                    .try_reduce(|| 0.0, |a, b| Ok(a.max(b)))?;
                Ok(GrowthEntry { m, value: best.sqrt(), kind: Kind::Exact })
            }
            Mode::Heuristic { seed } => {
                let (v, _) = subset_search(s1.dim(), m, cfg, seed, &pencil_max)?;
                Ok(GrowthEntry { m, value: v.sqrt(), kind: Kind::LowerWitness })
            }
        };
    }
    // Generic oracles: best ratio over a battery supported in [m].
    let mut rng = ChaCha8Rng::seed_from_u64(match mode { Mode::Heuristic { seed } => seed, Mode::Exact => 0 });
    let mut best: f64 = 0.0;
    for f in battery(m, &mut rng) {
        let d = s2.norm(&f)?;
        if d > 0.0 {
            best = best.max(s1.norm(&f)? / d);
        }
    }
    for i in 0..m {
        let mut e = vec![0.0; i + 1];
        e[i] = 1.0;
        best = best.max(s1.norm(&e)? / s2.norm(&e)?);
    }
    Ok(GrowthEntry { m, value: best, kind: Kind::LowerWitness })
}

/// `½ max(δ̃_m(S1→S2), δ̃_m(S2→S1))`, a lower bound for `k̃_{2m}` of `S1 ⋄ S2`.
pub fn ccdom_lower(g1: &SymMatrix, g2: &SymMatrix, m: usize) -> Result<GrowthEntry> {
    let (hi, lo) = gen_sym_eig_extremes(&g1.leading(m), &g2.leading(m))?;
    let v = 0.5 * hi.sqrt().max(1.0 / lo.sqrt());
    Ok(GrowthEntry { m: 2 * m, value: v, kind: Kind::LowerWitness })
}

/// ccdom bound series for the diamond of two Gram-backed systems.
pub fn ccdom_series(s1: &FiniteSystem, s2: &FiniteSystem, ms: &[usize]) -> Result<GrowthSeries> {
    let g1 = gram_or_err(s1)?;
    let g2 = gram_or_err(s2)?;
    let mut out = GrowthSeries::new("ccdom_lower", format!("({} ⊕ {}) ⋄", s1.label(), s2.label()));
    for &m in ms {
        let e = ccdom_lower(&g1, &g2, m)?;
        out.push(e.m, e.value, e.kind)?;
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SignMode {
    AllSignsExact,
    RandomSigns,
}

fn signed_norm(sys: &FiniteSystem, set: &[usize], signs: &[f64]) -> Result<f64> {
    let len = set.iter().max().map_or(0, |&i| i + 1);
    let mut f = vec![0.0; len];
    for (&i, &s) in set.iter().zip(signs) {
        f[i] = s;
    }
    sys.norm(&f)
}

/// `φ_m = sup ‖Σ_{n∈A} ε_n x_n‖` over `|A| = m` and signs, searched over a structured family.
pub fn phi_fundamental(sys: &FiniteSystem, m: usize, mode: SignMode, seed: u64, cfg: &SearchConfig) -> Result<Measured> {
    let n = sys.dim();
    if m == 0 || m > n {
        return Err(Error::InvalidParameter(format!("m = {m} outside 1..={n}")));
    }
    if mode == SignMode::AllSignsExact && m > 20 {
        return Err(Error::BudgetExceeded { needed: 1u128 << m, cap: 1 << 20 });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let full = n <= 63 && binomial_sum(n, m).saturating_mul(1u128 << (m - 1)) <= cfg.enumeration_cap;
    let mut sets: Vec<Vec<usize>> = Vec::new();
    if full && mode == SignMode::AllSignsExact {
        sets = (1u64..(1u64 << n)).filter(|x| x.count_ones() as usize == m).map(mask_to_set).collect();
    } else {
        for start in [0, 1, n / 2, n - m] {
            if start + m <= n {
                sets.push((start..start + m).collect());
            }
        }
        for step in 2..=3 {
            if (m - 1) * step < n {
                sets.push((0..m).map(|i| i * step).collect());
            }
        }
        for _ in 0..8 {
            let mut all: Vec<usize> = (0..n).collect();
            all.shuffle(&mut rng);
            let mut s = all[..m].to_vec();
            s.sort_unstable();
            sets.push(s);
        }
    }
    let mut best: f64 = 0.0;
    for set in &sets {
        match mode {
            SignMode::AllSignsExact => {
                for pattern in 0u64..(1u64 << (m - 1)) {
                    let signs: Vec<f64> = (0..m).map(|i| if i > 0 && pattern >> (i - 1) & 1 == 1 { -1.0 } else { 1.0 }).collect();
                    best = best.max(signed_norm(sys, set, &signs)?);
                }
            }
            SignMode::RandomSigns => {
                best = best.max(signed_norm(sys, set, &vec![1.0; m])?);
                for _ in 0..16 {
                    let signs: Vec<f64> = (0..m).map(|_| if rng.gen_bool(0.5) { 1.0 } else { -1.0 }).collect();
                    best = best.max(signed_norm(sys, set, &signs)?);
                }
            }
        }
    }
    let kind = if full && mode == SignMode::AllSignsExact { Kind::Exact } else { Kind::LowerWitness };
    Ok(Measured { value: best, kind })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    /// `‖f‖_X / ‖a‖_U`.
    Hilbertian,
    /// `‖a‖_U / ‖f‖_X`.
    Besselian,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TransformReport {
    pub constant: f64,
    /// `(support size, best ratio at that size)`.
    pub per_scale: Vec<(usize, f64)>,
    pub best: Witness,
}

/// Test vectors supported in the first `n` coordinates.
pub fn battery(n: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let mut out = Vec::new();
    for e in [0.0, 0.25, 0.5, 0.75, 1.0] {
        out.push((1..=n).map(|k| (k as f64).powf(-e)).collect::<Vec<f64>>());
    }
    // Profile in the frequency ordering 0, 1, -1, 2, -2, …
    for e in [0.5, 0.75] {
        out.push((0..n).map(|i| ((i + 1) / 2 + 1) as f64).map(|k| k.powf(-e)).collect());
    }
    out.push((0..n).map(|i| if i % 2 == 0 { 1.0 } else { -1.0 }).collect());
    out.push((0..n).map(|_| if rng.gen_bool(0.5) { 1.0 } else { -1.0 }).collect());
    out.push((0..n).map(|_| rng.gen_range(-1.0..1.0)).collect());
    let sparse = (n / 8).max(1);
    let mut f = vec![0.0; n];
    for _ in 0..sparse {
        f[rng.gen_range(0..n)] = rng.gen_range(-1.0..1.0);
    }
    if f.iter().all(|&x| x == 0.0) {
        f[0] = 1.0;
    }
    out.push(f);
    out
}

/// Largest transform ratio over the battery at each support size in `scales`.
pub fn transform_norms(sys: &FiniteSystem, u: &SpaceSpec, direction: Direction, scales: &[usize], seed: u64) -> Result<TransformReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut per_scale = Vec::with_capacity(scales.len());
    let mut best = Witness { support: vec![], coeffs: vec![], ratio: 0.0 };
    for &n in scales {
        if n == 0 || n > sys.dim() {
            return Err(Error::DimensionMismatch { expected: sys.dim(), found: n });
        }
        let vecs = battery(n, &mut rng);
        let ratios: Vec<f64> = vecs
            .par_iter()
            .map(|f| -> Result<f64> {
                let (x, c) = (sys.norm(f)?, space_norm(u, f)?);
                Ok(match direction {
                    Direction::Hilbertian => x / c,
                    Direction::Besselian => c / x,
                })
            })
            .collect::<Result<_>>()?;
        let (i, &r) = ratios.iter().enumerate().fold((0, &f64::NEG_INFINITY), |a, b| if b.1 > a.1 { b } else { a });
        per_scale.push((n, r));
        if r > best.ratio {
            best = Witness { support: (0..n).collect(), coeffs: vecs[i].clone(), ratio: r };
        }
    }
    Ok(TransformReport { constant: best.ratio, per_scale, best })
}

/// `C1·C2·δ_m[U1, U2]`.
pub fn bhcc_envelope(c1: f64, c2: f64, u1: &SpaceSpec, u2: &SpaceSpec, m: usize) -> Result<GrowthEntry> {
    Ok(GrowthEntry { m, value: c1 * c2 * delta_closed_form(u1, u2, m)?, kind: Kind::UpperEnvelope })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GreedyReport {
    pub greedy_set: Vec<usize>,
    pub greedy_error: f64,
    pub best_error: f64,
    pub ratio: f64,
    pub exact: bool,
}

/// Indices of the `m` largest `|f_i|`, ties to the lowest index.
pub fn greedy_set(f: &[f64], m: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..f.len()).collect();
    idx.sort_by(|&i, &j| f[j].abs().total_cmp(&f[i].abs()).then(i.cmp(&j)));
    let mut a = idx[..m.min(f.len())].to_vec();
    a.sort_unstable();
    a
}

fn remove_set(f: &[f64], a: &[usize]) -> Vec<f64> {
    let mut g = f.to_vec();
    for &i in a {
        g[i] = 0.0;
    }
    g
}

/// Greedy error against the best `m`-term coordinate-projection error.
pub fn greedy_ratio(sys: &FiniteSystem, f: &[f64], m: usize, seed: u64, cfg: &SearchConfig) -> Result<GreedyReport> {
    let support: Vec<usize> = (0..f.len()).filter(|&i| f[i] != 0.0).collect();
    if m >= support.len() {
        return Err(Error::InvalidParameter(format!("m = {m} must be below the support size {}", support.len())));
    }
    let ga = greedy_set(f, m);
    let greedy_error = sys.norm(&remove_set(f, &ga))?;
    let err_of = |local: &[usize]| -> Result<f64> {
        let a: Vec<usize> = local.iter().map(|&i| support[i]).collect();
        sys.norm(&remove_set(f, &a))
    };
    let s = support.len();
    let exact = s <= 18;
    let best_error = if exact {
        (1u64..(1u64 << s))
            .filter(|x| x.count_ones() as usize == m)
            .map(|mask| err_of(&mask_to_set(mask)))
            .collect::<Result<Vec<_>>>()?
            .into_iter()
            .fold(greedy_error, f64::min)
    } else {
        // Swap descent from the greedy set plus random restarts.
        let local_greedy: Vec<usize> = ga.iter().map(|g| support.binary_search(g).unwrap()).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let restarts = 4;
        let per = (cfg.budget / 20 / restarts).max(8);
        let mut best = greedy_error;
        for r in 0..restarts {
            let mut cur: Vec<usize> = if r == 0 {
                local_greedy.clone()
            } else {
                let mut all: Vec<usize> = (0..s).collect();
                all.shuffle(&mut rng);
                all[..m].to_vec()
            };
            let mut cur_e = err_of(&cur)?;
            for _ in 0..per {
                let i = rng.gen_range(0..m);
                let j = rng.gen_range(0..s);
                if cur.contains(&j) {
                    continue;
                }
                let old = cur[i];
                cur[i] = j;
                let e = err_of(&cur)?;
                if e < cur_e {
                    cur_e = e;
                } else {
                    cur[i] = old;
                }
            }
            best = best.min(cur_e);
        }
        best
    };
    Ok(GreedyReport { greedy_set: ga, greedy_error, best_error, ratio: greedy_error / best_error, exact })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::systems::{diamond, direct_sum, OuterRule, SystemSpec};
    use proptest::prelude::{prop_assert, proptest, ProptestConfig};

    fn gram(rows: &[&[f64]]) -> FiniteSystem {
        FiniteSystem::from_gram(SymMatrix::from_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap(), "g").unwrap()
    }

    fn random_gram(n: usize, seed: u64) -> FiniteSystem {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let b: Vec<f64> = (0..n * n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let g = SymMatrix::from_fn(n, |i, j| (0..n).map(|k| b[i * n + k] * b[j * n + k]).sum::<f64>() + if i == j { 0.3 } else { 0.0 });
        FiniteSystem::from_gram(g, format!("random({n},{seed})")).unwrap()
    }

    /// Dense grid over the unit circle of the G-norm.
    fn grid_projection_norm_2x2(g: &SymMatrix, a: usize) -> f64 {
        let mut best: f64 = 0.0;
        for k in 0..200_000 {
            let t = k as f64 * std::f64::consts::PI / 200_000.0;
            let x = [t.cos(), t.sin()];
            let mut y = [0.0; 2];
            y[a] = x[a];
            best = best.max((g.quad_form(&y) / g.quad_form(&x)).sqrt());
        }
        best
    }

    #[test]
    fn projection_norm_examples() {
        let s = gram(&[&[1.0, 0.5], &[0.5, 1.0]]);
        let v = projection_norm(&s, &[0], 0).unwrap();
        assert_eq!(v.kind, Kind::Exact);
        assert!((v.value - 2.0 / 3f64.sqrt()).abs() < 1e-14);
        assert!((grid_projection_norm_2x2(&s.gram().unwrap(), 0) - v.value).abs() < 1e-9);
        let o = FiniteSystem::orthonormal(5);
        assert!((projection_norm(&o, &[1, 3], 0).unwrap().value - 1.0).abs() < 1e-15);
        assert_eq!(projection_norm(&o, &[], 0).unwrap().value, 0.0);
        let r = random_gram(6, 1);
        assert!((projection_norm(&r, &[0, 1, 2, 3, 4, 5], 0).unwrap().value - 1.0).abs() < 1e-12);
        assert!(projection_norm(&r, &[6], 0).is_err());
    }

    #[test]
    fn fast_formula_matches_pencil() {
        for seed in 0..5 {
            let s = random_gram(7, seed);
            let g = s.gram().unwrap();
            let p = GramPencil::new(g.clone()).unwrap();
            for mask in 1u64..(1 << 7) {
                let a = mask_to_set(mask);
                let fast = p.norm_sq(&a).unwrap().sqrt();
                let slow = projection_norm_pencil(&g, &a).unwrap();
                assert!((fast - slow).abs() < 1e-9 * slow, "{a:?} {fast} {slow}");
            }
        }
    }

    #[test]
    fn k_examples() {
        let s = gram(&[&[1.0, 0.5], &[0.5, 1.0]]);
        let cfg = SearchConfig::default();
        let k = k_exact_series(&s, 2, &cfg).unwrap();
        assert!((k[0] - 2.0 / 3f64.sqrt()).abs() < 1e-14);
        let o = FiniteSystem::orthonormal(8);
        assert!(k_exact_series(&o, 8, &cfg).unwrap().iter().all(|&v| (v - 1.0).abs() < 1e-14));
        assert!(ktilde_exact_series(&o, 8, &cfg).unwrap().iter().all(|&v| (v - 1.0).abs() < 1e-14));
        for seed in 0..4 {
            let r = random_gram(9, seed);
            let k = k_exact_series(&r, 9, &cfg).unwrap();
            let kt = ktilde_exact_series(&r, 9, &cfg).unwrap();
            for m in 0..9 {
                assert!(kt[m] <= k[m] * (1.0 + 1e-12));
                assert!(k[m] >= 1.0 && kt[m] >= 1.0);
                if m > 0 {
                    assert!(k[m] >= k[m - 1] && kt[m] >= kt[m - 1]);
                }
            }
            let (h, set) = ktilde_heuristic(&r, 9, 3, &cfg).unwrap();
            assert!(h <= kt[8] * (1.0 + 1e-12));
            let direct = projection_norm_pencil(&r.gram().unwrap(), &set).unwrap();
            assert!((direct.max(1.0) - h).abs() < 1e-9);
        }
        let big = FiniteSystem::orthonormal(30);
        assert!(matches!(k_exact_series(&big, 3, &cfg), Err(Error::BudgetExceeded { .. })));
        assert!(matches!(ktilde_exact_series(&big, 25, &cfg), Err(Error::BudgetExceeded { .. })));
    }

    #[test]
    fn scaling_invariance() {
        let cfg = SearchConfig::default();
        let r = random_gram(8, 7);
        let g = r.gram().unwrap();
        let rs = FiniteSystem::from_gram(g.scaled(3.7), "scaled").unwrap();
        let (a, b) = (k_exact_series(&r, 8, &cfg).unwrap(), k_exact_series(&rs, 8, &cfg).unwrap());
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-10 * x);
        }
        let d = delta_between(&r, &r, 4, false, Mode::Exact, &cfg).unwrap();
        assert!((d.value - 1.0).abs() < 1e-10);
    }

    #[test]
    fn direct_sum_identities() {
        // k̃_m(S1 ⊕ S2) = max(k̃_{⌈m/2⌉}(S1), k̃_{⌊m/2⌋}(S2)) and k_m(S1 ⊕ S2) = max(k_m(S1), k_m(S2)).
        let cfg = SearchConfig::default();
        for seed in 0..3 {
            let s1 = Arc::new(random_gram(4, 10 + seed));
            let s2 = Arc::new(random_gram(4, 20 + seed));
            let sum = direct_sum(s1.clone(), s2.clone(), OuterRule::Hilbert).unwrap();
            let kt = ktilde_exact_series(&sum, 8, &cfg).unwrap();
            let (k1, k2) = (ktilde_exact_series(&s1, 4, &cfg).unwrap(), ktilde_exact_series(&s2, 4, &cfg).unwrap());
            for m in 1usize..=8 {
                let a = k1[m.div_ceil(2) - 1];
                let b = if m / 2 == 0 { 1.0 } else { k2[m / 2 - 1] };
                assert!((kt[m - 1] - a.max(b)).abs() < 1e-10, "m={m}");
            }
            let k = k_exact_series(&sum, 8, &cfg).unwrap();
            let (k1, k2) = (k_exact_series(&s1, 4, &cfg).unwrap(), k_exact_series(&s2, 4, &cfg).unwrap());
            for m in 1..=8 {
                let want = k1[m.min(4) - 1].max(k2[m.min(4) - 1]);
                assert!((k[m - 1] - want).abs() < 1e-10, "m={m}");
            }
        }
    }

    #[test]
    fn ccdom_inequality_on_small_diamonds() {
        let cfg = SearchConfig::default();
        for (b, a) in [(0.5, 0.5), (0.25, 0.75), (0.8, 0.1)] {
            let d = SystemSpec::aa_diamond(b, a, 8).build().unwrap();
            let kt = ktilde_exact_series(&d, 16, &cfg).unwrap();
            let l = SystemSpec::Trig { lambda: -b, dim: 8, arrangement: crate::weight::Arrangement::RealNatural }.build().unwrap();
            let r = SystemSpec::Trig { lambda: a, dim: 8, arrangement: crate::weight::Arrangement::RealNatural }.build().unwrap();
            let s = ccdom_series(&l, &r, &(1..=8).collect::<Vec<_>>()).unwrap();
            for e in &s.entries {
                assert!(kt[e.m - 1] >= e.value * (1.0 - 1e-12), "m={} {} < {}", e.m, kt[e.m - 1], e.value);
            }
        }
        let o = Arc::new(FiniteSystem::orthonormal(4));
        let g = o.gram().unwrap();
        assert!((ccdom_lower(&g, &g, 3).unwrap().value - 0.5).abs() < 1e-15);
        let dd = diamond(o.clone(), o).unwrap();
        assert!(ktilde_exact_series(&dd, 8, &cfg).unwrap().iter().all(|&v| (v - 1.0).abs() < 1e-12));
    }

    #[test]
    fn delta_examples() {
        let cfg = SearchConfig::default();
        let l1 = FiniteSystem::sequence(SpaceSpec::lp(1.0), 10).unwrap();
        let li = FiniteSystem::sequence(SpaceSpec::lp(f64::INFINITY), 10).unwrap();
        assert_eq!(delta_between(&l1, &li, 6, false, Mode::Exact, &cfg).unwrap().value, 6.0);
        // Generic path with an oracle that is not a plain sequence space.
        let l1r = crate::systems::rotate(Arc::new(l1.clone())).unwrap();
        let lir = crate::systems::rotate(Arc::new(li.clone())).unwrap();
        let w = delta_between(&l1r, &lir, 4, true, Mode::Heuristic { seed: 1 }, &cfg).unwrap();
        assert_eq!(w.kind, Kind::LowerWitness);
        assert!(w.value >= 1.0);
        let r = random_gram(6, 3);
        let o = FiniteSystem::orthonormal(6);
        let e = delta_between(&r, &o, 3, false, Mode::Exact, &cfg).unwrap().value;
        let h = delta_between(&r, &o, 3, false, Mode::Heuristic { seed: 2 }, &cfg).unwrap().value;
        assert!(h <= e * (1.0 + 1e-12));
        let t = delta_between(&r, &o, 3, true, Mode::Exact, &cfg).unwrap().value;
        assert!(t <= e * (1.0 + 1e-12));
        // δ̃ for a 2×2 Gram against the identity: sqrt of the largest eigenvalue.
        let s = gram(&[&[2.0, 1.0], &[1.0, 2.0]]);
        let d = delta_between(&s, &FiniteSystem::orthonormal(2), 2, true, Mode::Exact, &cfg).unwrap().value;
        assert!((d - 3f64.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn dirichlet_ratio_is_a_delta_witness() {
        // ‖D_m‖_{H_{-β}} / ‖D_m‖_{H_α} ≤ δ for the complex trigonometric systems on 2m+1 coordinates.
        let cfg = SearchConfig::default();
        let (beta, alpha, m) = (0.5, 0.5, 6);
        let n = 2 * m + 1;
        let s1 = SystemSpec::Trig { lambda: -beta, dim: n, arrangement: crate::weight::Arrangement::ComplexNatural }.build().unwrap();
        let s2 = SystemSpec::Trig { lambda: alpha, dim: n, arrangement: crate::weight::Arrangement::ComplexNatural }.build().unwrap();
        let ones = vec![1.0; n];
        let ratio = s1.norm(&ones).unwrap() / s2.norm(&ones).unwrap();
        let d = delta_between(&s1, &s2, n, true, Mode::Exact, &cfg).unwrap().value;
        assert!(d >= ratio * (1.0 - 1e-12));
    }

    #[test]
    fn phi_examples() {
        let cfg = SearchConfig::default();
        let o = FiniteSystem::orthonormal(10);
        for m in [1, 4, 9] {
            let v = phi_fundamental(&o, m, SignMode::AllSignsExact, 0, &cfg).unwrap();
            assert!((v.value - (m as f64).sqrt()).abs() < 1e-14);
            assert_eq!(v.kind, Kind::Exact);
        }
        let s = gram(&[&[1.0, 0.5], &[0.5, 3.0]]);
        assert!((phi_fundamental(&s, 1, SignMode::AllSignsExact, 0, &cfg).unwrap().value - 3f64.sqrt()).abs() < 1e-15);
        let t = SystemSpec::Trig { lambda: -0.5, dim: 201, arrangement: crate::weight::Arrangement::ComplexNatural }.build().unwrap();
        let w0 = t.norm(&[1.0]).unwrap();
        for m in [4usize, 16, 64, 200] {
            let v = phi_fundamental(&t, m, SignMode::RandomSigns, 1, &cfg).unwrap();
            // Envelope C·m^{3/4} with C = 2‖x_1‖ covers the measured witnesses.
            assert!(v.value <= 2.0 * w0 * (m as f64).powf(0.75), "m={m} {}", v.value);
        }
    }

    #[test]
    fn transform_examples() {
        let o = FiniteSystem::orthonormal(64);
        for dir in [Direction::Hilbertian, Direction::Besselian] {
            let r = transform_norms(&o, &SpaceSpec::lp(2.0), dir, &[8, 16, 64], 0).unwrap();
            assert!((r.constant - 1.0).abs() < 1e-14);
        }
        let r = transform_norms(&o, &SpaceSpec::lp(1.0), Direction::Besselian, &[16], 0).unwrap();
        assert!((r.constant - 4.0).abs() < 1e-12);
        let re = o.norm(&r.best.coeffs).unwrap();
        assert!((space_norm(&SpaceSpec::lp(1.0), &r.best.coeffs).unwrap() / re - r.constant).abs() < 1e-10);
    }

    #[test]
    fn bhcc_examples() {
        for m in [1, 10, 100] {
            assert_eq!(bhcc_envelope(1.0, 1.0, &SpaceSpec::lp(2.0), &SpaceSpec::lp(2.0), m).unwrap().value, 1.0);
        }
        let e = bhcc_envelope(2.0, 3.0, &SpaceSpec::lp(4.0 / 3.0), &SpaceSpec::lp(4.0), 16).unwrap();
        assert!((e.value - 6.0 * 4.0).abs() < 1e-12);
    }

    #[test]
    fn greedy_examples() {
        let cfg = SearchConfig::default();
        let o = FiniteSystem::orthonormal(12);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let f: Vec<f64> = (0..12).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let r = greedy_ratio(&o, &f, 4, 0, &cfg).unwrap();
            assert!(r.exact && (r.ratio - 1.0).abs() < 1e-15);
        }
        let f = [0.1, 5.0, 0.2, 0.1];
        let r = greedy_ratio(&o, &f, 1, 0, &cfg).unwrap();
        assert_eq!(r.greedy_set, vec![1]);
        assert_eq!(greedy_set(&[1.0, -1.0, 1.0], 2), vec![0, 1]);
        let s = random_gram(10, 5);
        for _ in 0..20 {
            let f: Vec<f64> = (0..10).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let r = greedy_ratio(&s, &f, 3, 0, &cfg).unwrap();
            assert!(r.ratio >= 1.0 - 1e-12);
        }
        assert!(greedy_ratio(&o, &[1.0, 0.0], 1, 0, &cfg).is_err());
    }

    #[test]
    fn dkk_witness_is_reproducible() {
        let cfg = SearchConfig::default();
        let y = SystemSpec::AlmostGreedy { inner: Box::new(SystemSpec::aa_diamond(0.5, 0.5, 4)), space: SpaceSpec::lp(2.0), blocks: 6 }
            .build()
            .unwrap();
        for m in [6usize, 14, 30, 62] {
            let w = dkk_ktilde_witness(&y, m, &cfg).unwrap();
            assert!(w.support.iter().all(|&i| i < m));
            let again = ratio_of(&y, &w.coeffs, &w.support).unwrap();
            assert!((again.max(1.0) - w.ratio).abs() < 1e-10);
            // The lifted ratio equals the inner exact value.
            let Oracle::Dkk { inner, partition } = y.oracle() else { unreachable!() };
            let k = partition.blocks_within(m);
            let kt = ktilde_exact_series(inner, k, &cfg).unwrap();
            assert!((w.ratio - kt[k - 1]).abs() < 1e-8 * kt[k - 1], "m={m} {} {}", w.ratio, kt[k - 1]);
        }
    }

    #[test]
    fn growth_series_csv() {
        let mut s = GrowthSeries::new("k", "sys,a");
        s.push(1, 1.0, Kind::Exact).unwrap();
        s.push(1, 0.5, Kind::LowerWitness).unwrap();
        s.push(2, 1.5, Kind::Exact).unwrap();
        assert!(s.push(1, 1.0, Kind::Exact).is_err());
        assert!(s.push(2, 1.0, Kind::Exact).is_err());
        let csv = s.to_csv();
        assert!(csv.starts_with("quantity,system,m,value,kind\nk,\"sys,a\",1,1.0000000000000000e0,exact\n"));
        assert_eq!(s.fit_points(), vec![(1.0, 1.0), (2.0, 1.5)]);
    }

    #[test]
    fn witnesses_for_non_gram_oracles() {
        let l1 = Arc::new(FiniteSystem::sequence(SpaceSpec::lp(1.0), 4).unwrap());
        let rl = crate::systems::rotate(l1).unwrap();
        let m = projection_norm(&rl, &[0], 1).unwrap();
        assert_eq!(m.kind, Kind::LowerWitness);
        // ‖R b‖₁ = √2 max(|b_1|, |b_2|) on each pair, so ‖S_{1}‖ = 1 exactly.
        assert!((m.value - 1.0).abs() < 1e-12, "{}", m.value);
        let y = SystemSpec::Dkk { inner: Box::new(SystemSpec::aa_diamond(0.5, 0.5, 2)), space: SpaceSpec::lp(1.5), sizes: vec![2, 4] }
            .build()
            .unwrap();
        let a = [0usize, 2, 3];
        let w = projection_witness(&y, &a, 6, 4, 2000).unwrap();
        assert!(w.ratio >= 1.0);
        assert!((ratio_of(&y, &w.coeffs, &a).unwrap() - w.ratio).abs() < 1e-10);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn projection_norm_at_least_one(seed in 0u64..1000, mask in 1u64..64) {
            let s = random_gram(6, seed);
            let v = projection_norm(&s, &mask_to_set(mask), 0).unwrap();
            prop_assert!(v.value >= 1.0);
            let raw = GramPencil::new(s.gram().unwrap()).unwrap().norm_sq(&mask_to_set(mask)).unwrap();
            prop_assert!(raw >= 1.0 - 1e-9);
        }
    }
}

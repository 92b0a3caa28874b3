//! Acceptance suite: one verdict per criterion, with tolerances fixed as constants below.

use std::sync::Arc;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::conditionality::*;
use crate::error::Result;
use crate::fit::*;
use crate::spaces::*;
use crate::systems::*;
use crate::weight::*;

pub const DIRICHLET_GAMMA_TOL: f64 = 0.03;
pub const DIRICHLET_R2_MIN: f64 = 0.999;
pub const DIRICHLET_FLAT_TOL: f64 = 1e-12;
pub const DIRICHLET_SECONDS: f64 = 120.0;
pub const WCOEF_SPREAD_MAX: f64 = 3.0;
pub const WCOEF_ROUTE_TOL: f64 = 1e-8;
pub const SECONDARY_BAND_MAX: f64 = 1.5;
pub const SECONDARY_SLOPE_TOL: f64 = 0.05;
pub const CCDOM_GAMMA_TOL: f64 = 0.05;
pub const FORMULA_TOL: f64 = 1e-10;
pub const PAIRING_TOL: f64 = 1e-12;
pub const FE_UNBOUNDED_SLOPE: f64 = 0.03;
pub const DOUBLING_REL_TOL: f64 = 0.25;
pub const DKK_GAMMA_TOL: f64 = 0.2;
pub const GREEDY_SLOPE_MAX: f64 = 0.05;
pub const TOTAL_SECONDS: f64 = 900.0;
/// Slack for comparing two independently rounded quantities that should satisfy `a ≥ b`.
const ROUNDING: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CriterionResult {
    pub id: u32,
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
    pub seconds: f64,
}

impl CriterionResult {
    pub fn line(&self) -> String {
        format!("[{}] {:>2} {:<28} {:>8.2}s  {}", if self.passed { "PASS" } else { "FAIL" }, self.id, self.name, self.seconds, self.detail)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AcceptConfig {
    pub seed: u64,
    pub search: SearchConfig,
}

impl Default for AcceptConfig {
    fn default() -> Self {
        AcceptConfig { seed: 20240501, search: SearchConfig::default() }
    }
}

pub const CRITERIA: [(u32, &str); 10] = [
    (1, "dirichlet_exponents"),
    (2, "weight_coefficients"),
    (3, "secondary_index_norm"),
    (4, "diamond_ccdom_growth"),
    (5, "exact_witness_consistency"),
    (6, "formula_oracles"),
    (7, "transform_boundedness"),
    (8, "almost_greedy_growth"),
    (9, "greedy_behavior"),
    (10, "total_runtime"),
];

/// Runs criteria 1 to 9; criterion 10 needs the whole run, see [`run_all`].
pub fn run_criterion(id: u32, cfg: &AcceptConfig) -> CriterionResult {
    let name = CRITERIA.iter().find(|c| c.0 == id).map(|c| c.1).unwrap_or("unknown");
    let t = Instant::now();
    let out = match id {
        1 => dirichlet_exponents(),
        2 => weight_coefficients(),
        3 => secondary_index_norm(),
        4 => diamond_ccdom_growth(cfg),
        5 => exact_witness_consistency(cfg),
        6 => formula_oracles(cfg),
        7 => transform_boundedness(cfg),
        8 => almost_greedy_growth(cfg),
        9 => greedy_behavior(cfg),
        _ => Ok((false, format!("no criterion {id}"))),
    };
    let seconds = t.elapsed().as_secs_f64();
    let (passed, detail) = out.unwrap_or_else(|e| (false, format!("error: {e}")));
    let passed = passed && !(id == 1 && seconds > DIRICHLET_SECONDS);
    CriterionResult { id, name, passed, detail, seconds }
}

/// All criteria in order; `on_result` sees each verdict as soon as it is known.
pub fn run_all(cfg: &AcceptConfig, mut on_result: impl FnMut(&CriterionResult)) -> Vec<CriterionResult> {
    let t = Instant::now();
    let mut out = Vec::new();
    for &(id, _) in &CRITERIA[..9] {
        let r = run_criterion(id, cfg);
        on_result(&r);
        out.push(r);
    }
    let total = t.elapsed().as_secs_f64();
    let r = CriterionResult {
        id: 10,
        name: CRITERIA[9].1,
        passed: total <= TOTAL_SECONDS,
        detail: format!("criteria 1-9 took {total:.1}s (limit {TOTAL_SECONDS}s)"),
        seconds: total,
    };
    on_result(&r);
    out.push(r);
    out
}

type Verdict = Result<(bool, String)>;

fn points(ms: &[usize], mut f: impl FnMut(usize) -> Result<f64>) -> Result<Vec<(f64, f64)>> {
    ms.iter().map(|&m| Ok((m as f64, f(m)?))).collect()
}

fn dirichlet_exponents() -> Verdict {
    let ms = dyadic(4, 12);
    let mut ok = true;
    let mut detail = Vec::new();
    for lambda in [-0.5, 0.0, 0.5] {
        let table = WeightFourierTable::build(WeightParams::new(lambda)?, 2 << 12, DEFAULT_TOL)?;
        let pts = points(&ms, |m| dirichlet_norm(&table, m))?;
        let fit = fit_power(&pts)?;
        let want = (1.0 - lambda) / 2.0;
        let good = (fit.gamma - want).abs() <= DIRICHLET_GAMMA_TOL && fit.r2 >= DIRICHLET_R2_MIN;
        ok &= good;
        detail.push(format!("λ={lambda}: γ={:.4} (want {want}) R²={:.6}", fit.gamma, fit.r2));
        if lambda == 0.0 {
            let err = pts.iter().map(|&(m, v)| (v - (2.0 * m + 1.0).sqrt()).abs()).fold(0.0, f64::max);
            ok &= err <= DIRICHLET_FLAT_TOL;
            detail.push(format!("max |‖D_m‖ - √(2m+1)| = {err:.2e}"));
        }
    }
    Ok((ok, detail.join("; ")))
}

fn weight_coefficients() -> Verdict {
    let mut ok = true;
    let mut detail = Vec::new();
    for alpha in [0.25, 0.5, 0.75] {
        let params = WeightParams::new(-alpha)?;
        let table = WeightFourierTable::build(params, 1 << 13, DEFAULT_TOL)?;
        let pts = points(&dyadic(4, 13), |n| Ok(table.get(n as i64) * (1.0 + n as f64).powf(1.0 - alpha)))?;
        let st = ratio_stabilization(&pts, BOUNDED_SLOPE)?;
        let mut worst: f64 = 0.0;
        for n in 0..=(1i64 << 10) {
            let direct = weight_fourier_coeff(params, n, DEFAULT_TOL)?;
            worst = worst.max((table.get(n) - direct).abs() / direct.abs().max(f64::MIN_POSITIVE));
        }
        let good = st.bounded && st.spread <= WCOEF_SPREAD_MAX && worst <= WCOEF_ROUTE_TOL;
        ok &= good;
        detail.push(format!("α={alpha}: slope={:.4} spread={:.3} routes rel={worst:.1e}", st.slope, st.spread));
    }
    Ok((ok, detail.join("; ")))
}

fn secondary_index_norm() -> Verdict {
    let table = WeightFourierTable::build(WeightParams::new(-0.5)?, 1 << 12, DEFAULT_TOL)?;
    let ms = dyadic(6, 12);
    let sq: Vec<f64> = ms.iter().map(|&m| fm_norm(&table, m).map(|v| v * v)).collect::<Result<_>>()?;
    let ratios: Vec<f64> = ms.iter().zip(&sq).map(|(&m, v)| v / harmonic(m)).collect();
    let band = ratios.iter().cloned().fold(0.0, f64::max) / ratios.iter().cloned().fold(f64::INFINITY, f64::min);
    let x: Vec<f64> = ms.iter().map(|&m| harmonic(m).ln()).collect();
    let y: Vec<f64> = sq.iter().map(|v| v.ln()).collect();
    let (slope, _, _) = least_squares(&x, &y);
    let ok = band <= SECONDARY_BAND_MAX && (slope - 1.0).abs() <= SECONDARY_SLOPE_TOL;
    Ok((ok, format!("‖f_m‖²/H_m from {:.3} to {:.3}, band {band:.3}; slope vs log H_m = {slope:.4} (want 1 ± {SECONDARY_SLOPE_TOL})", ratios[0], ratios[ratios.len() - 1])))
}

fn diamond_ccdom_growth(cfg: &AcceptConfig) -> Verdict {
    let n = 1024;
    let s1 = SystemSpec::Trig { lambda: -0.5, dim: n, arrangement: Arrangement::RealNatural }.build()?;
    let s2 = SystemSpec::Trig { lambda: 0.5, dim: n, arrangement: Arrangement::RealNatural }.build()?;
    let series = ccdom_series(&s1, &s2, &dyadic(4, 10))?;
    let pts: Vec<(f64, f64)> = series.entries.iter().map(|e| (e.m as f64 / 2.0, e.value)).collect();
    let fit = fit_power(&pts)?;
    let (u1, u2) = (SpaceSpec::lp(4.0 / 3.0), SpaceSpec::lp(4.0));
    let d = SystemSpec::aa_diamond(0.5, 0.5, 2048).build()?;
    let scales = dyadic(4, 12);
    let c1 = transform_norms(&d, &u1, Direction::Hilbertian, &scales, cfg.seed)?.constant;
    let c2 = transform_norms(&d, &u2, Direction::Besselian, &scales, cfg.seed + 1)?.constant;
    let mut min_margin = f64::INFINITY;
    for e in &series.entries {
        let env = bhcc_envelope(c1, c2, &u1, &u2, e.m)?;
        min_margin = min_margin.min(env.value / e.value);
    }
    let ok = (fit.gamma - 0.5).abs() <= CCDOM_GAMMA_TOL && min_margin >= 1.0;
    Ok((ok, format!("γ={:.4} (want 0.5 ± {CCDOM_GAMMA_TOL}); C1={c1:.4} C2={c2:.4}; min envelope/point = {min_margin:.3}", fit.gamma)))
}

fn exact_witness_consistency(cfg: &AcceptConfig) -> Verdict {
    let half = 8;
    let left = SystemSpec::Trig { lambda: -0.5, dim: half, arrangement: Arrangement::RealNatural }.build()?;
    let right = SystemSpec::Trig { lambda: 0.5, dim: half, arrangement: Arrangement::RealNatural }.build()?;
    let d = SystemSpec::aa_diamond(0.5, 0.5, half).build()?;
    let exact = ktilde_exact_series(&d, d.dim(), &cfg.search)?;
    let (g1, g2) = (left.gram().expect("dense"), right.gram().expect("dense"));
    let mut ok = true;
    let mut min_gap = f64::INFINITY;
    for m in 1..=half {
        let b = ccdom_lower(&g1, &g2, m)?;
        let k = exact[b.m - 1];
        ok &= k >= b.value * (1.0 - ROUNDING);
        min_gap = min_gap.min(k - b.value);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut witnesses = 0;
    let mut worst_excess = f64::NEG_INFINITY;
    for m in 1..=d.dim() {
        let (h, _) = ktilde_heuristic(&d, m, rng.gen(), &cfg.search)?;
        let mut vals = vec![h];
        for _ in 0..4 {
            let a: Vec<usize> = (0..m).filter(|_| rng.gen_bool(0.5)).collect();
            if !a.is_empty() {
                vals.push(projection_witness(&d, &a, m, rng.gen(), cfg.search.budget)?.ratio);
            }
        }
        for v in vals {
            witnesses += 1;
            worst_excess = worst_excess.max(v / exact[m - 1] - 1.0);
            ok &= v <= exact[m - 1] * (1.0 + ROUNDING);
        }
    }
    Ok((ok, format!("dim {}: min k̃_2m - ½maxδ̃_m = {min_gap:.4}; {witnesses} witnesses, max witness/exact - 1 = {worst_excess:.2e}", d.dim())))
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}

fn random_vec(rng: &mut ChaCha8Rng, len: usize) -> Vec<f64> {
    (0..len).map(|_| if rng.gen_bool(0.2) { 0.0 } else { rng.gen_range(-1.0..1.0) }).collect()
}

fn ratio_never_exceeds(rng: &mut ChaCha8Rng, u1: &SpaceSpec, u2: &SpaceSpec, m: usize, d: f64, samples: usize) -> Result<bool> {
    for _ in 0..samples {
        let len = rng.gen_range(1..=m);
        let f = random_vec(rng, len);
        if f.iter().all(|&x| x == 0.0) {
            continue;
        }
        if space_norm(u1, &f)? / space_norm(u2, &f)? > d * (1.0 + FORMULA_TOL) {
            return Ok(false);
        }
    }
    Ok(true)
}

fn formula_oracles(cfg: &AcceptConfig) -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut parts = Vec::new();

    let mut lorentz = 0.0f64;
    for &(p, q) in &[(2.0, 1.0), (1.5, 2.0), (4.0, 0.5), (4.0 / 3.0, 2.0), (3.0, f64::INFINITY)] {
        for m in [1usize, 3, 17, 256] {
            let f: Vec<f64> = (1..=m).map(|n| (n as f64).powf(-1.0 / p)).collect();
            let want = if q.is_infinite() { 1.0 } else { harmonic(m).powf(1.0 / q) };
            lorentz = lorentz.max(rel(space_norm(&SpaceSpec::lorentz(p, q), &f)?, want));
        }
    }
    parts.push(("lorentz_norm", lorentz <= FORMULA_TOL, format!("{lorentz:.1e}")));

    let (m, mut attain, mut never) = (12usize, 0.0f64, true);
    for &(q, r) in &[(1.0, f64::INFINITY), (1.5, 4.0), (2.0, 3.0)] {
        let (u1, u2) = (SpaceSpec::lp(q), SpaceSpec::lp(r));
        let d = delta_closed_form(&u1, &u2, m)?;
        let ones = vec![1.0; m];
        attain = attain.max(rel(space_norm(&u1, &ones)? / space_norm(&u2, &ones)?, d));
        never &= ratio_never_exceeds(&mut rng, &u1, &u2, m, d, 10_000)?;
    }
    parts.push(("lp_delta", attain <= FORMULA_TOL && never, format!("attained {attain:.1e}, never exceeded {never}")));

    let (mut wattain, mut wnever) = (0.0f64, true);
    for w in [WeightSeq::power(-0.5, 64)?, WeightSeq::lorentz(3.0, 64)?, WeightSeq::power(0.0, 64)?] {
        let (u1, u2) = (SpaceSpec::weighted(w.clone(), 1.5), SpaceSpec::weighted(w.clone(), 3.0));
        let m = 20;
        let d = delta_closed_form(&u1, &u2, m)?;
        let ext: Vec<f64> = (1..=m).map(|n| 1.0 / w.s(n)).collect();
        wattain = wattain.max(rel(space_norm(&u1, &ext)? / space_norm(&u2, &ext)?, d));
        wnever &= ratio_never_exceeds(&mut rng, &u1, &u2, m, d, 2_000)?;
    }
    parts.push(("weighted_lorentz_delta", wattain <= FORMULA_TOL && wnever, format!("attained {wattain:.1e}, never exceeded {wnever}")));

    let (mut cmin, mut cmax) = (f64::INFINITY, 0.0f64);
    let specs = [
        SpaceSpec::lp(1.0),
        SpaceSpec::lp(1.5),
        SpaceSpec::lp(2.0),
        SpaceSpec::lp(4.0),
        SpaceSpec::lorentz(2.0, 1.0),
        SpaceSpec::lorentz(4.0 / 3.0, 2.0),
        SpaceSpec::lorentz(4.0, 2.0),
        SpaceSpec::weighted(WeightSeq::power(-0.5, 1 << 10)?, 2.0),
    ];
    for s in &specs {
        for row in fundamental_table(s, 1 << 10)? {
            cmin = cmin.min(row.c);
            cmax = cmax.max(row.c);
        }
    }
    let band = cmin >= 1.0 - FORMULA_TOL && cmax <= 2.0 + FORMULA_TOL;
    parts.push(("c_m_band", band, format!("c_m in [{cmin:.4}, {cmax:.4}]")));

    let (sum_ok, sum_detail) = direct_sum_identities(cfg)?;
    parts.push(("direct_sum_conditionality", sum_ok, sum_detail));

    let mut pairing = 0.0f64;
    for sizes in [vec![1, 2, 4, 8], vec![3, 1, 5, 2, 6]] {
        for space in [SpaceSpec::lp(2.0), SpaceSpec::lp(1.5), SpaceSpec::lorentz(2.0, 1.0)] {
            let sigma = Partition::new(sizes.clone(), &space)?;
            let r = dual_pairing_check(&sigma, 200, rng.gen())?;
            pairing = pairing.max(r.max_p_error).max(r.max_q_error);
            for _ in 0..200 {
                let f: Vec<f64> = (0..sigma.dim()).map(|_| rng.gen_range(-1.0..1.0)).collect();
                let (pf, _) = averaging_projection(&sigma, &f)?;
                let (ppf, _) = averaging_projection(&sigma, &pf)?;
                let scale = 1.0 + pf.iter().map(|v| v * v).sum::<f64>().sqrt();
                pairing = pairing.max(pf.iter().zip(&ppf).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max) / scale);
            }
        }
    }
    parts.push(("averaging_projection", pairing <= PAIRING_TOL, format!("{pairing:.1e}")));

    let ok = parts.iter().all(|p| p.1);
    let detail = parts.iter().map(|(n, ok, d)| format!("{n}{} {d}", if *ok { "" } else { " FAILED" })).collect::<Vec<_>>().join("; ");
    Ok((ok, detail))
}

/// `k̃_m(S1 ⊕ S2) = max(k̃_⌈m/2⌉(S1), k̃_⌊m/2⌋(S2))` and `k_m(S1 ⊕ S2) = max(k_m(S1), k_m(S2))` at dimension 8.
fn direct_sum_identities(cfg: &AcceptConfig) -> Result<(bool, String)> {
    let half = 4;
    let s1 = Arc::new(SystemSpec::Trig { lambda: -0.5, dim: half, arrangement: Arrangement::RealNatural }.build()?);
    let s2 = Arc::new(SystemSpec::Trig { lambda: 0.75, dim: half, arrangement: Arrangement::RealNatural }.build()?);
    let sum = direct_sum(s1.clone(), s2.clone(), OuterRule::Hilbert)?;
    let kt = ktilde_exact_series(&sum, 2 * half, &cfg.search)?;
    let (kt1, kt2) = (ktilde_exact_series(&s1, half, &cfg.search)?, ktilde_exact_series(&s2, half, &cfg.search)?);
    let k = k_exact_series(&sum, 2 * half, &cfg.search)?;
    let (k1, k2) = (k_exact_series(&s1, half, &cfg.search)?, k_exact_series(&s2, half, &cfg.search)?);
    let at = |v: &[f64], m: usize| if m == 0 { 1.0 } else { v[m.min(v.len()) - 1] };
    let mut worst = 0.0f64;
    for m in 1..=2 * half {
        worst = worst.max(rel(kt[m - 1], at(&kt1, m.div_ceil(2)).max(at(&kt2, m / 2))));
        worst = worst.max(rel(k[m - 1], at(&k1, m).max(at(&k2, m))));
    }
    Ok((worst <= FORMULA_TOL, format!("max rel {worst:.1e}")))
}

fn transform_boundedness(cfg: &AcceptConfig) -> Verdict {
    let m_max = 1usize << 12;
    let dim = 2 * m_max + 1;
    let ha = SystemSpec::Trig { lambda: 0.5, dim, arrangement: Arrangement::ComplexNatural }.build()?;
    let hma = SystemSpec::Trig { lambda: -0.5, dim, arrangement: Arrangement::ComplexNatural }.build()?;
    let scales: Vec<usize> = dyadic(4, 12).into_iter().map(|m| 2 * m + 1).collect();
    let series = |rep: TransformReport| -> Vec<(f64, f64)> { rep.per_scale.iter().map(|&(n, v)| ((n / 2) as f64, v)).collect() };
    let bess = series(transform_norms(&ha, &SpaceSpec::lorentz(4.0, 2.0), Direction::Besselian, &scales, cfg.seed)?);
    let hilb = series(transform_norms(&hma, &SpaceSpec::lorentz(4.0 / 3.0, 2.0), Direction::Hilbertian, &scales, cfg.seed + 1)?);
    let below = series(transform_norms(&ha, &SpaceSpec::lp(3.75), Direction::Besselian, &scales, cfg.seed + 2)?);
    let (sb, sh, sl) = (
        ratio_stabilization(&bess, BOUNDED_SLOPE)?,
        ratio_stabilization(&hilb, BOUNDED_SLOPE)?,
        ratio_stabilization(&below, BOUNDED_SLOPE)?,
    );
    let unbounded = sl.slope > FE_UNBOUNDED_SLOPE;
    let ok = sb.bounded && sh.bounded && unbounded;
    Ok((
        ok,
        format!(
            "besselian ℓ_(4,2) slope {:.4} bounded={}; hilbertian ℓ_(4/3,2) slope {:.4} bounded={}; besselian ℓ_3.75 slope {:.4} unbounded={unbounded}",
            sb.slope, sb.bounded, sh.slope, sh.bounded, sl.slope
        ),
    ))
}

/// The system of criteria 8 and 9.
pub fn almost_greedy_example() -> Result<FiniteSystem> {
    SystemSpec::AlmostGreedy { inner: Box::new(SystemSpec::aa_diamond(0.5, 0.5, 8)), space: SpaceSpec::lp(2.0), blocks: 13 }.build()
}

fn almost_greedy_growth(cfg: &AcceptConfig) -> Verdict {
    let y = almost_greedy_example()?;
    let all = points(&dyadic(2, 14), |m| Ok(dkk_ktilde_witness(&y, m, &cfg.search)?.ratio))?;
    let target = 2f64.powf(0.75 - 0.25);
    let doubling = doubling_pairs(&all);
    let dbl_ok = !doubling.is_empty() && doubling.iter().all(|d| (d.1 / target - 1.0).abs() <= DOUBLING_REL_TOL);
    // Below m = 16 at most two blocks fit, so the witness is the trivial 1.
    let fit = fit_log_power(&all[2..])?;
    let fit_ok = (fit.gamma - 0.5).abs() <= DKK_GAMMA_TOL;
    let dd: Vec<String> = doubling.iter().map(|d| format!("{}:{:.3}", d.0, d.1)).collect();
    Ok((
        dbl_ok && fit_ok,
        format!("dim {}; doubling [{}] vs {target:.3} ± 25%; log-power γ={:.3} over m ≥ 16 (want 0.5 ± {DKK_GAMMA_TOL})", y.dim(), dd.join(" "), fit.gamma),
    ))
}

fn greedy_behavior(cfg: &AcceptConfig) -> Verdict {
    let y = almost_greedy_example()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut maxes = Vec::new();
    for s in dyadic(6, 10) {
        let mut mx = 0.0f64;
        for _ in 0..200 {
            let f: Vec<f64> = (0..s).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let m = rng.gen_range(1..s);
            mx = mx.max(greedy_ratio(&y, &f, m, rng.gen(), &cfg.search)?.ratio);
        }
        maxes.push((s as f64, mx));
    }
    let slope = fit_power(&maxes)?.gamma;
    let mut ortho_ok = true;
    for s in [12usize, 64] {
        let o = FiniteSystem::orthonormal(s);
        for _ in 0..20 {
            let f: Vec<f64> = (0..s).map(|_| rng.gen_range(-1.0..1.0)).collect();
            ortho_ok &= greedy_ratio(&o, &f, rng.gen_range(1..s), rng.gen(), &cfg.search)?.ratio == 1.0;
        }
    }
    let mx: Vec<String> = maxes.iter().map(|p| format!("{}:{:.3}", p.0, p.1)).collect();
    Ok((
        slope.abs() < GREEDY_SLOPE_MAX && ortho_ok,
        format!("max ratio per support [{}], slope {slope:.4} (want |·| < {GREEDY_SLOPE_MAX}); orthonormal ratio exactly 1: {ortho_ok}", mx.join(" ")),
    ))
}

//! Fourier analysis of the power weight `w_λ(t) = |t|^λ` on `[-1/2, 1/2]`.
//!
//! Coefficients are `ŵ_λ(n) = 2∫₀^{1/2} t^λ cos(2πnt) dt`. Two independent
//! quadrature routes are provided:
//!
//! * [`weight_fourier_coeff`] integrates directly in `t`, one half-period at a
//!   time with two Gauss-Legendre panels each. For `λ < 0` the first
//!   half-period is mapped by `t = s^{1/(1+λ)}`, which makes the integrand
//!   bounded.
//! * [`WeightFourierTable::build`] uses the scaled form
//!   `ŵ_λ(n) = 2^{-λ} n^{-1-λ} ∫₀^n x^λ cos(πx) dx`. The unit-interval integrals
//!   do not depend on `n`, so one running sum yields the whole table in O(N).
//!   For `λ = -α` the running sum is exactly the alternating integral `A_n`.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};
use std::sync::OnceLock;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::SymMatrix;

pub const DEFAULT_TOL: f64 = 1e-10;
pub const MIN_TOL: f64 = 1e-13;
pub const CACHE_ENV: &str = "CONDLAB_CACHE_DIR";

/// Number of geometric levels used to resolve an endpoint singularity.
const GRADED_LEVELS: i32 = 44;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeightParams {
    pub lambda: f64,
}

impl WeightParams {
    pub fn new(lambda: f64) -> Result<Self> {
        if !(lambda > -1.0 && lambda < 1.0) {
            return Err(Error::InvalidExponent(lambda));
        }
        Ok(WeightParams { lambda })
    }

    pub fn alpha(&self) -> f64 {
        self.lambda.abs()
    }

    /// `q_α = 2/(1+α)`.
    pub fn q_alpha(&self) -> f64 {
        2.0 / (1.0 + self.alpha())
    }

    /// `r_α = 2/(1-α)`.
    pub fn r_alpha(&self) -> f64 {
        2.0 / (1.0 - self.alpha())
    }
}

fn gauss_legendre_16() -> &'static ([f64; 16], [f64; 16]) {
    static GL: OnceLock<([f64; 16], [f64; 16])> = OnceLock::new();
    GL.get_or_init(|| {
        let n = 16usize;
        let mut x = [0.0; 16];
        let mut w = [0.0; 16];
        for i in 0..n {
            let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (mut p0, mut p1) = (1.0, z);
                for k in 2..=n {
                    let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                    p0 = p1;
                    p1 = p2;
                }
                dp = n as f64 * (z * p1 - p0) / (z * z - 1.0);
                let dz = p1 / dp;
                z -= dz;
                if dz.abs() < 1e-16 {
                    break;
                }
            }
            x[i] = z;
            w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
        }
        (x, w)
    })
}

/// 16-point Gauss-Legendre rule on `[a, b]`.
#[inline]
pub fn gauss16(f: &impl Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    let (x, w) = gauss_legendre_16();
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let mut s = 0.0;
    for i in 0..16 {
        s += w[i] * f(c + h * x[i]);
    }
    s * h
}

/// Panels `[a + L·2^{-j-1}, a + L·2^{-j}]`, `j < levels`, geometrically refined toward `a`.
fn graded(f: &impl Fn(f64) -> f64, a: f64, b: f64, levels: i32) -> f64 {
    let len = b - a;
    let mut s = 0.0;
    for j in (0..levels).rev() {
        let lo = a + len * 0.5f64.powi(j + 1);
        let hi = a + len * 0.5f64.powi(j);
        s += gauss16(f, lo, hi);
    }
    s
}

/// Neumaier-compensated accumulator.
#[derive(Default, Clone, Copy)]
struct Sum {
    s: f64,
    c: f64,
}

impl Sum {
    fn add(&mut self, x: f64) {
        let t = self.s + x;
        if self.s.abs() >= x.abs() {
            self.c += (self.s - t) + x;
        } else {
            self.c += (x - t) + self.s;
        }
        self.s = t;
    }
    fn value(&self) -> f64 {
        self.s + self.c
    }
}

fn check_tol(tol: f64) -> Result<()> {
    if !(tol >= MIN_TOL && tol.is_finite()) {
        return Err(Error::InvalidParameter(format!("tol {tol} below {MIN_TOL}")));
    }
    Ok(())
}

/// `∫₀^h t^λ cos(ωt) dt` with the endpoint singularity removed.
fn singular_piece(lam: f64, omega: f64, h: f64) -> f64 {
    let eps_frac = 0.5f64.powi(GRADED_LEVELS);
    if lam < 0.0 {
        let k = 1.0 / (1.0 + lam);
        let top = h.powf(1.0 + lam);
        let f = |s: f64| (omega * s.powf(k)).cos();
        // On [0, ε] the integrand is 1 up to O((ωε^k)²).
        k * (graded(&f, 0.0, top, GRADED_LEVELS) + top * eps_frac)
    } else {
        let f = |t: f64| t.powf(lam) * (omega * t).cos();
        let eps = h * eps_frac;
        graded(&f, 0.0, h, GRADED_LEVELS) + eps.powf(1.0 + lam) / (1.0 + lam)
    }
}

/// `ŵ_λ(n)` by direct quadrature in `t`.
pub fn weight_fourier_coeff(params: WeightParams, n: i64, tol: f64) -> Result<f64> {
    WeightParams::new(params.lambda)?;
    check_tol(tol)?;
    let n = n.unsigned_abs();
    let lam = params.lambda;
    let omega = 2.0 * PI * n as f64;
    let h = if n == 0 { 0.5 } else { 0.5 / n as f64 };
    let mut acc = Sum::default();
    acc.add(singular_piece(lam, omega, h));
    let f = |t: f64| t.powf(lam) * (omega * t).cos();
    for j in 1..n {
        let a = j as f64 * h;
        acc.add(gauss16(&f, a, a + 0.5 * h) + gauss16(&f, a + 0.5 * h, a + h));
    }
    Ok(2.0 * acc.value())
}

/// `c_j = ∫_j^{j+1} x^λ cos(πx) dx` for `j < count`.
fn unit_interval_integrals(lam: f64, count: usize) -> Vec<f64> {
    let mut c = Vec::with_capacity(count);
    if count == 0 {
        return c;
    }
    c.push(singular_piece(lam, PI, 1.0));
    let f = |x: f64| x.powf(lam) * (PI * x).cos();
    for j in 1..count {
        let a = j as f64;
        let third = 1.0 / 3.0;
        c.push(gauss16(&f, a, a + third) + gauss16(&f, a + third, a + 2.0 * third) + gauss16(&f, a + 2.0 * third, a + 1.0));
    }
    c
}

/// Running sums `I_n = ∫₀^n x^λ cos(πx) dx` for `n = 0..=count`.
fn cumulative_integrals(lam: f64, count: usize) -> Vec<f64> {
    let c = unit_interval_integrals(lam, count);
    let mut out = Vec::with_capacity(count + 1);
    let mut acc = Sum::default();
    out.push(0.0);
    for x in c {
        acc.add(x);
        out.push(acc.value());
    }
    out
}

fn closed_form_zero(lam: f64) -> f64 {
    2.0 * 0.5f64.powf(1.0 + lam) / (1.0 + lam)
}

/// `ŵ_{-α}(n) = 2^α n^{α-1} A_n` with `A_n = ∫₀^n cos(πx) x^{-α} dx`.
pub fn weight_coeff_tail_route(alpha: f64, n: i64) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidExponent(-alpha));
    }
    let n = n.unsigned_abs() as usize;
    if n == 0 {
        return Ok(closed_form_zero(-alpha));
    }
    let a_n = *cumulative_integrals(-alpha, n).last().unwrap();
    Ok(2f64.powf(alpha) * (n as f64).powf(alpha - 1.0) * a_n)
}

/// Immutable table of `ŵ_λ(n)`, `0 ≤ n ≤ max_index`; negative indices by evenness.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightFourierTable {
    pub params: WeightParams,
    pub max_index: usize,
    pub tol: f64,
    coeffs: Vec<f64>,
}

impl WeightFourierTable {
    pub fn build(params: WeightParams, max_index: usize, tol: f64) -> Result<Self> {
        WeightParams::new(params.lambda)?;
        check_tol(tol)?;
        let lam = params.lambda;
        let cum = cumulative_integrals(lam, max_index);
        let mut coeffs = Vec::with_capacity(max_index + 1);
        coeffs.push(closed_form_zero(lam));
        for n in 1..=max_index {
            let nf = n as f64;
            coeffs.push(2f64.powf(-lam) * nf.powf(-1.0 - lam) * cum[n]);
        }
        if lam == 0.0 {
            // Exact orthogonality in the unweighted space.
            coeffs.iter_mut().skip(1).for_each(|c| *c = 0.0);
        }
        Ok(WeightFourierTable { params, max_index, tol, coeffs })
    }

    /// Builds, or loads from `CONDLAB_CACHE_DIR` when that variable is set.
    pub fn load_or_build(params: WeightParams, max_index: usize, tol: f64) -> Result<Self> {
        match std::env::var_os(CACHE_ENV) {
            Some(dir) => Self::load_or_build_in(Path::new(&dir), params, max_index, tol),
            None => Self::build(params, max_index, tol),
        }
    }

    pub fn load_or_build_in(dir: &Path, params: WeightParams, max_index: usize, tol: f64) -> Result<Self> {
        let path = dir.join(Self::cache_file_name(params, max_index, tol));
        if let Ok(text) = std::fs::read_to_string(&path) {
            if let Ok(t) = Self::from_cache_str(&text) {
                if t.params == params && t.max_index == max_index && t.tol == tol {
                    return Ok(t);
                }
            }
        }
        let t = Self::build(params, max_index, tol)?;
        std::fs::create_dir_all(dir)?;
        crate::io::write_atomic(&path, t.to_cache_string().as_bytes())?;
        Ok(t)
    }

    pub fn cache_file_name(params: WeightParams, max_index: usize, tol: f64) -> PathBuf {
        PathBuf::from(format!("wcoef_{:e}_{}_{:e}.csv", params.lambda, max_index, tol))
    }

    /// `ŵ_λ(n)`, using evenness for negative `n`. Panics outside the table.
    #[inline]
    pub fn get(&self, n: i64) -> f64 {
        self.coeffs[n.unsigned_abs() as usize]
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    /// Header line `lambda,N,tol`, then `n,value` rows with 17 significant digits.
    pub fn to_cache_string(&self) -> String {
        let mut s = format!("{},{},{}\n", crate::io::fmt17(self.params.lambda), self.max_index, crate::io::fmt17(self.tol));
        for (n, v) in self.coeffs.iter().enumerate() {
            s.push_str(&format!("{},{}\n", n, crate::io::fmt17(*v)));
        }
        s
    }

    pub fn from_cache_str(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let header = lines.next().ok_or_else(|| Error::Parse("empty cache file".into()))?;
        let h: Vec<&str> = header.split(',').collect();
        if h.len() != 3 {
            return Err(Error::Parse(format!("bad cache header {header:?}")));
        }
        let pf = |s: &str| s.trim().parse::<f64>().map_err(|e| Error::Parse(format!("{s:?}: {e}")));
        let lambda = pf(h[0])?;
        let max_index: usize = h[1].trim().parse().map_err(|e| Error::Parse(format!("{:?}: {e}", h[1])))?;
        let tol = pf(h[2])?;
        let mut coeffs = Vec::with_capacity(max_index + 1);
        for (k, line) in lines.enumerate() {
            let (n, v) = line.split_once(',').ok_or_else(|| Error::Parse(format!("bad row {line:?}")))?;
            if n.trim().parse::<usize>().ok() != Some(k) {
                return Err(Error::Parse(format!("row {k} has index {n:?}")));
            }
            coeffs.push(pf(v)?);
        }
        if coeffs.len() != max_index + 1 {
            return Err(Error::Parse(format!("expected {} rows, found {}", max_index + 1, coeffs.len())));
        }
        Ok(WeightFourierTable { params: WeightParams::new(lambda)?, max_index, tol, coeffs })
    }

    fn require(&self, n: usize) -> Result<()> {
        if n > self.max_index {
            return Err(Error::DimensionMismatch { expected: n, found: self.max_index });
        }
        Ok(())
    }
}

/// Ordering of the trigonometric system.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Arrangement {
    /// `τ_n`, `n = -m..=m`.
    RawInteger,
    /// `φ_0 = τ_0`, `φ_{2k-1} = τ_k`, `φ_{2k} = τ_{-k}`.
    ComplexNatural,
    /// `1, cos(2πt), sin(2πt), cos(4πt), ...`.
    RealNatural,
}

impl Arrangement {
    /// Frequency of coordinate `index` in a system of dimension `dim`.
    pub fn frequency(self, index: usize, dim: usize) -> i64 {
        match self {
            Arrangement::RawInteger => index as i64 - ((dim as i64 - 1) / 2),
            Arrangement::ComplexNatural | Arrangement::RealNatural => {
                if index == 0 {
                    0
                } else if index % 2 == 1 {
                    index.div_ceil(2) as i64
                } else {
                    -((index / 2) as i64)
                }
            }
        }
    }

    fn check_dim(self, dim: usize) -> Result<()> {
        if dim == 0 || (self == Arrangement::RawInteger && dim % 2 == 0) {
            return Err(Error::DimensionMismatch { expected: dim | 1, found: dim });
        }
        Ok(())
    }

    /// Largest `|frequency|` used by a system of dimension `dim`.
    pub fn max_frequency(self, dim: usize) -> usize {
        match self {
            Arrangement::RawInteger => (dim - 1) / 2,
            _ => dim / 2,
        }
    }
}

/// Gram matrix of the first `dim` functions of the arrangement in `H_λ`.
pub fn gram_matrix(table: &WeightFourierTable, dim: usize, arrangement: Arrangement) -> Result<SymMatrix> {
    arrangement.check_dim(dim)?;
    table.require(2 * arrangement.max_frequency(dim))?;
    Ok(match arrangement {
        Arrangement::RawInteger | Arrangement::ComplexNatural => SymMatrix::from_fn(dim, |j, k| {
            table.get(arrangement.frequency(k, dim) - arrangement.frequency(j, dim))
        }),
        Arrangement::RealNatural => SymMatrix::from_fn(dim, |j, k| real_gram_entry(table, j, k)),
    })
}

/// Inner product of the real trigonometric functions with indices `j`, `k`.
fn real_gram_entry(table: &WeightFourierTable, j: usize, k: usize) -> f64 {
    // (kind, frequency): kind 0 constant, 1 cosine, 2 sine.
    let kind = |i: usize| if i == 0 { (0, 0i64) } else if i % 2 == 1 { (1, i.div_ceil(2) as i64) } else { (2, (i / 2) as i64) };
    let (kj, fj) = kind(j);
    let (kk, fk) = kind(k);
    match (kj, kk) {
        (0, 0) => table.get(0),
        (0, 1) | (1, 0) => table.get(fj + fk),
        (1, 1) => 0.5 * (table.get(fj - fk) + table.get(fj + fk)),
        (2, 2) => 0.5 * (table.get(fj - fk) - table.get(fj + fk)),
        _ => 0.0,
    }
}

/// `Σ_{j,k} x_j x_k ŵ(k - j)` for coefficients on consecutive frequencies.
pub fn toeplitz_form(table: &WeightFourierTable, x: &[f64]) -> f64 {
    let m = x.len();
    let mut acc = Sum::default();
    acc.add(table.get(0) * x.iter().map(|v| v * v).sum::<f64>());
    for d in 1..m {
        let w = table.get(d as i64);
        if w != 0.0 {
            let r: f64 = x[..m - d].iter().zip(&x[d..]).map(|(a, b)| a * b).sum();
            acc.add(2.0 * w * r);
        }
    }
    acc.value()
}

/// `H_λ` norm of `Σ a_j φ_j` for real coefficients under the arrangement.
pub fn h_norm(table: &WeightFourierTable, arrangement: Arrangement, coeffs: &[f64]) -> Result<f64> {
    let dim = coeffs.len();
    arrangement.check_dim(dim)?;
    let mf = arrangement.max_frequency(dim);
    table.require(2 * mf)?;
    let mut re = vec![0.0; 2 * mf + 1];
    let mut im = vec![0.0; 2 * mf + 1];
    let off = mf as i64;
    match arrangement {
        Arrangement::RawInteger | Arrangement::ComplexNatural => {
            for (i, &a) in coeffs.iter().enumerate() {
                re[(arrangement.frequency(i, dim) + off) as usize] += a;
            }
        }
        Arrangement::RealNatural => {
            re[off as usize] += coeffs[0];
            for (i, &a) in coeffs.iter().enumerate().skip(1) {
                let f = i.div_ceil(2) as i64;
                let (p, n) = ((off + f) as usize, (off - f) as usize);
                if i % 2 == 1 {
                    re[p] += 0.5 * a;
                    re[n] += 0.5 * a;
                } else {
                    im[p] -= 0.5 * a;
                    im[n] += 0.5 * a;
                }
            }
        }
    }
    let q = toeplitz_form(table, &re) + toeplitz_form(table, &im);
    Ok(q.max(0.0).sqrt())
}

/// `H_λ` norm for complex coefficients in the RawInteger or ComplexNatural arrangement.
pub fn h_norm_complex(table: &WeightFourierTable, arrangement: Arrangement, coeffs: &[Complex64]) -> Result<f64> {
    if arrangement == Arrangement::RealNatural {
        return Err(Error::InvalidParameter("complex coefficients need a complex arrangement".into()));
    }
    let re: Vec<f64> = coeffs.iter().map(|c| c.re).collect();
    let im: Vec<f64> = coeffs.iter().map(|c| c.im).collect();
    let a = h_norm(table, arrangement, &re)?;
    let b = h_norm(table, arrangement, &im)?;
    Ok((a * a + b * b).sqrt())
}

/// `‖D_m‖_{H_λ} = (Σ_{|j|≤2m} (2m+1-|j|) ŵ(j))^{1/2}`.
pub fn dirichlet_norm(table: &WeightFourierTable, m: usize) -> Result<f64> {
    table.require(2 * m)?;
    let mut acc = Sum::default();
    acc.add((2 * m + 1) as f64 * table.get(0));
    for j in 1..=2 * m {
        acc.add(2.0 * (2 * m + 1 - j) as f64 * table.get(j as i64));
    }
    Ok(acc.value().max(0.0).sqrt())
}

/// `‖f_m‖_{H_{-α}}` for `f_m = Σ_{n≤m} n^{-1/q_α} e^{2πint}`; the table must be for `λ = -α`.
pub fn fm_norm(table: &WeightFourierTable, m: usize) -> Result<f64> {
    let alpha = -table.params.lambda;
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidExponent(table.params.lambda));
    }
    if m == 0 {
        return Err(Error::InvalidParameter("m must be at least 1".into()));
    }
    table.require(m)?;
    let b: Vec<f64> = (1..=m).map(|n| (n as f64).powf(-(1.0 + alpha) / 2.0)).collect();
    Ok(toeplitz_form(table, &b).max(0.0).sqrt())
}

/// Quantities from the two alternating-sum arguments for `0 < α < 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AlternatingTail {
    pub alpha: f64,
    pub n: usize,
    /// `∫₀^n cos(πx) x^{-α} dx`, the integral behind `ŵ_{-α}(n) = 2^α n^{α-1}·(this)`.
    pub weight_integral: f64,
    /// `A_n = Σ_{k≤n} k^{-(1+α)/2} (1+n-k)^{α-1}`.
    pub a_n: f64,
    /// `B_n = Beta((1-α)/2, α) n^{-(1-α)/2}`.
    pub b_n: f64,
    /// `R_n`, defined for `n ≥ 2`.
    pub r_n: Option<f64>,
}

impl AlternatingTail {
    /// `A_n ≤ B_n`.
    pub fn lower_band_holds(&self) -> bool {
        self.a_n <= self.b_n
    }

    /// `B_n ≤ A_n + R_n` (vacuous for `n = 1`). Numerically this fails from
    /// `n = 6` on: the gap `B_n - A_n` decays like `n^{-(1-α)/2}`, slower than `R_n`.
    pub fn upper_band_holds(&self) -> bool {
        self.r_n.is_none_or(|r| self.b_n <= self.a_n + r)
    }
}

pub fn alternating_tail(alpha: f64, n: usize) -> Result<AlternatingTail> {
    Ok(alternating_tail_series(alpha, &[n])?[0])
}

/// [`alternating_tail`] for several `n`, sharing the quadrature work.
pub fn alternating_tail_series(alpha: f64, ns: &[usize]) -> Result<Vec<AlternatingTail>> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidParameter(format!("alpha {alpha} outside (0, 1)")));
    }
    if ns.contains(&0) {
        return Err(Error::InvalidParameter("n must be at least 1".into()));
    }
    let nmax = ns.iter().copied().max().unwrap_or(1);
    let cum = cumulative_integrals(-alpha, nmax);
    let beta = statrs::function::beta::beta((1.0 - alpha) / 2.0, alpha);
    Ok(ns
        .iter()
        .map(|&n| {
            let nf = n as f64;
            let mut acc = Sum::default();
            for k in 1..=n {
                acc.add((k as f64).powf(-(1.0 + alpha) / 2.0) * ((1 + n - k) as f64).powf(alpha - 1.0));
            }
            let r_n = (n >= 2).then(|| {
                let m1 = nf - 1.0;
                -nf.powf(alpha - 1.0) - nf.powf(-(1.0 + alpha) / 2.0)
                    + (2.0 / (1.0 - alpha)) * m1.powf(alpha - 1.0)
                    + (1.0 / alpha) * m1.powf(-(1.0 + alpha) / 2.0)
            });
            AlternatingTail {
                alpha,
                n,
                weight_integral: cum[n],
                a_n: acc.value(),
                b_n: beta * nf.powf(-(1.0 - alpha) / 2.0),
                r_n,
            }
        })
        .collect())
}

/// Estimate of `lim_n ∫₀^n cos(πx) x^{-α} dx` by averaging consecutive partial integrals.
pub fn weight_integral_limit(alpha: f64, n: usize) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidParameter(format!("alpha {alpha} outside (0, 1)")));
    }
    let cum = cumulative_integrals(-alpha, n + 1);
    Ok(0.5 * (cum[n] + cum[n + 1]))
}

/// Change of basis between the real and complex natural arrangements.
#[derive(Debug, Clone)]
pub struct RealComplexTransform {
    /// Column `j` holds `φ^R_j` in the `φ` coordinates (row-major `N×N`).
    pub forward: Vec<Complex64>,
    /// Column `j` holds `φ_j` in the `φ^R` coordinates.
    pub inverse: Vec<Complex64>,
    pub n: usize,
}

pub fn real_complex_transform(n: usize) -> Result<RealComplexTransform> {
    if n % 2 == 0 {
        return Err(Error::DimensionMismatch { expected: n + 1, found: n });
    }
    let z = Complex64::new(0.0, 0.0);
    let mut fwd = vec![z; n * n];
    let mut inv = vec![z; n * n];
    fwd[0] = Complex64::new(1.0, 0.0);
    inv[0] = Complex64::new(1.0, 0.0);
    for k in 1..=(n - 1) / 2 {
        let (c, s) = (2 * k - 1, 2 * k);
        // cos = (φ_{2k-1} + φ_{2k})/2, sin = (φ_{2k-1} - φ_{2k})/(2i).
        fwd[c * n + c] = Complex64::new(0.5, 0.0);
        fwd[s * n + c] = Complex64::new(0.5, 0.0);
        fwd[c * n + s] = Complex64::new(0.0, -0.5);
        fwd[s * n + s] = Complex64::new(0.0, 0.5);
        // φ_{2k-1} = cos + i sin, φ_{2k} = cos - i sin.
        inv[c * n + c] = Complex64::new(1.0, 0.0);
        inv[s * n + c] = Complex64::new(0.0, 1.0);
        inv[c * n + s] = Complex64::new(1.0, 0.0);
        inv[s * n + s] = Complex64::new(0.0, -1.0);
    }
    Ok(RealComplexTransform { forward: fwd, inverse: inv, n })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn p(l: f64) -> WeightParams {
        WeightParams::new(l).unwrap()
    }

    /// Power-series oracle: `2 Σ_k (-1)^k ω^{2k}/(2k)! · (1/2)^{2k+λ+1}/(2k+λ+1)`.
    fn series_oracle(lam: f64, n: i64) -> f64 {
        let w = 2.0 * PI * n as f64;
        let mut s = 0.0;
        let mut term_fact = 1.0; // ω^{2k}/(2k)!
        for k in 0..200 {
            let e = 2.0 * k as f64 + lam + 1.0;
            s += if k % 2 == 0 { 1.0 } else { -1.0 } * term_fact * 0.5f64.powf(e) / e;
            term_fact *= w * w / ((2 * k + 1) as f64 * (2 * k + 2) as f64);
        }
        2.0 * s
    }

    #[test]
    fn zeroth_coefficient_closed_form() {
        let v = weight_fourier_coeff(p(-0.5), 0, DEFAULT_TOL).unwrap();
        assert!((v - 2f64.sqrt() * 2.0).abs() < 1e-12, "{v}");
        for &l in &[-0.9, -0.25, 0.0, 0.3, 0.9] {
            let want = 2.0 * 0.5f64.powf(1.0 + l) / (1.0 + l);
            assert!((weight_fourier_coeff(p(l), 0, DEFAULT_TOL).unwrap() - want).abs() < 1e-12);
        }
    }

    #[test]
    fn unweighted_orthogonality() {
        assert!(weight_fourier_coeff(p(0.0), 3, DEFAULT_TOL).unwrap().abs() < 1e-13);
        let t = WeightFourierTable::build(p(0.0), 10, DEFAULT_TOL).unwrap();
        assert_eq!(t.get(0), 1.0);
        assert!(t.coeffs()[1..].iter().all(|&c| c == 0.0));
    }

    #[test]
    fn direct_route_matches_series_oracle() {
        for &l in &[-0.75, -0.5, -0.25, 0.25, 0.5, 0.75] {
            for n in 1..=3 {
                let got = weight_fourier_coeff(p(l), n, DEFAULT_TOL).unwrap();
                let want = series_oracle(l, n);
                assert!((got - want).abs() < 1e-10, "λ={l} n={n}: {got} vs {want}");
            }
        }
    }

    #[test]
    fn table_matches_direct_route() {
        for &l in &[-0.75, -0.5, -0.25, 0.25, 0.5, 0.75] {
            let t = WeightFourierTable::build(p(l), 300, DEFAULT_TOL).unwrap();
            for n in [0i64, 1, 2, 7, 64, 299, 300] {
                let d = weight_fourier_coeff(p(l), n, DEFAULT_TOL).unwrap();
                assert!((t.get(n) - d).abs() < 1e-12, "λ={l} n={n}");
                assert_eq!(t.get(-n), t.get(n));
            }
        }
    }

    #[test]
    fn tail_stabilization_example() {
        let a = weight_fourier_coeff(p(-0.5), 64, DEFAULT_TOL).unwrap() * 65f64.sqrt();
        let b = weight_fourier_coeff(p(-0.5), 32, DEFAULT_TOL).unwrap() * 33f64.sqrt();
        assert!((a / b - 1.0).abs() < 0.05);
        let r = weight_coeff_tail_route(0.5, 64).unwrap();
        assert!((r / weight_fourier_coeff(p(-0.5), 64, DEFAULT_TOL).unwrap() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn invalid_inputs() {
        assert_eq!(WeightParams::new(1.0).unwrap_err(), Error::InvalidExponent(1.0));
        assert!(weight_fourier_coeff(WeightParams { lambda: -1.5 }, 1, DEFAULT_TOL).is_err());
        assert!(weight_fourier_coeff(p(0.5), 1, 1e-15).is_err());
    }

    #[test]
    fn exponent_pair() {
        let w = p(-0.5);
        assert!((w.q_alpha() - 4.0 / 3.0).abs() < 1e-15 && (w.r_alpha() - 4.0).abs() < 1e-15);
        assert!((1.0 / w.q_alpha() + 1.0 / w.r_alpha() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn gram_examples() {
        let t0 = WeightFourierTable::build(p(0.0), 40, DEFAULT_TOL).unwrap();
        assert_eq!(gram_matrix(&t0, 9, Arrangement::ComplexNatural).unwrap(), SymMatrix::identity(9));
        let g = gram_matrix(&t0, 9, Arrangement::RealNatural).unwrap();
        let mut want = vec![0.5; 9];
        want[0] = 1.0;
        assert_eq!(g, SymMatrix::diagonal(&want));
        let t = WeightFourierTable::build(p(-0.5), 40, DEFAULT_TOL).unwrap();
        let g = gram_matrix(&t, 3, Arrangement::RawInteger).unwrap();
        assert!((g.get(1, 1) - 2.0 * 2f64.sqrt()).abs() < 1e-12);
        assert_eq!(g.get(0, 2), t.get(2));
        assert_eq!(g.get(0, 1), g.get(1, 2));
        assert!(gram_matrix(&t, 4, Arrangement::RawInteger).is_err());
        let d1 = dirichlet_norm(&t, 1).unwrap();
        let want = 3.0 * t.get(0) + 4.0 * t.get(1) + 2.0 * t.get(2);
        assert!((d1 * d1 - want).abs() < 1e-12);
        assert!((h_norm(&t, Arrangement::RawInteger, &[1.0, 1.0, 1.0]).unwrap() - d1).abs() < 1e-12);
    }

    #[test]
    fn real_gram_is_conjugated_complex_gram() {
        let t = WeightFourierTable::build(p(0.35), 40, DEFAULT_TOL).unwrap();
        let n = 9;
        let gc = gram_matrix(&t, n, Arrangement::ComplexNatural).unwrap();
        let gr = gram_matrix(&t, n, Arrangement::RealNatural).unwrap();
        let tr = real_complex_transform(n).unwrap();
        for a in 0..n {
            for b in 0..n {
                let mut s = Complex64::new(0.0, 0.0);
                for i in 0..n {
                    for j in 0..n {
                        s += tr.forward[i * n + a].conj() * gc.get(i, j) * tr.forward[j * n + b];
                    }
                }
                assert!((s.re - gr.get(a, b)).abs() < 1e-14 && s.im.abs() < 1e-14);
            }
        }
    }

    #[test]
    fn transform_examples() {
        let one = real_complex_transform(1).unwrap();
        assert_eq!(one.forward, vec![Complex64::new(1.0, 0.0)]);
        assert!(real_complex_transform(4).is_err());
        let n = 7;
        let tr = real_complex_transform(n).unwrap();
        for i in 0..n {
            for j in 0..n {
                let s: Complex64 = (0..n).map(|k| tr.forward[i * n + k] * tr.inverse[k * n + j]).sum();
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((s - want).norm() < 1e-15);
            }
        }
        // ‖cos(2πkt)‖² in H_0 through the transform: |1/2|² + |1/2|².
        let t0 = WeightFourierTable::build(p(0.0), 20, DEFAULT_TOL).unwrap();
        let col: Vec<Complex64> = (0..n).map(|i| tr.forward[i * n + 3]).collect();
        assert!((h_norm_complex(&t0, Arrangement::ComplexNatural, &col).unwrap().powi(2) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn norm_of_tau_independent_of_n() {
        let t = WeightFourierTable::build(p(-0.3), 40, DEFAULT_TOL).unwrap();
        let base = h_norm(&t, Arrangement::RawInteger, &[0.0, 0.0, 1.0, 0.0, 0.0]).unwrap();
        for i in 0..9 {
            let mut e = vec![0.0; 9];
            e[i] = 1.0;
            assert_eq!(h_norm(&t, Arrangement::RawInteger, &e).unwrap(), base);
        }
    }

    /// Direct weighted integral of `|p(t)|² |t|^λ`, graded toward the singularity.
    fn integral_oracle(lam: f64, freqs: &[i64], c: &[Complex64]) -> f64 {
        let f = |t: f64| {
            let v: Complex64 = freqs.iter().zip(c).map(|(&k, &a)| a * Complex64::from_polar(1.0, 2.0 * PI * k as f64 * t)).sum();
            v.norm_sqr() * t.abs().powf(lam)
        };
        let mut s = 0.0;
        for side in [-1.0, 1.0] {
            let g = |u: f64| f(side * u);
            // 1/2048-wide panels away from zero, graded panels on the first one.
            let h = 0.5 / 2048.0;
            s += graded(&g, 0.0, h, 60);
            for j in 1..2048 {
                s += gauss16(&g, j as f64 * h, (j + 1) as f64 * h);
            }
        }
        s
    }

    #[test]
    fn norm_matches_weighted_integral() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for trial in 0..10 {
            let lam = [0.5, 0.25, 0.0, 0.6, 0.8][trial % 5];
            let t = WeightFourierTable::build(p(lam), 40, DEFAULT_TOL).unwrap();
            let dim = 7;
            let c: Vec<Complex64> = (0..dim).map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
            let freqs: Vec<i64> = (0..dim).map(|i| Arrangement::ComplexNatural.frequency(i, dim)).collect();
            let got = h_norm_complex(&t, Arrangement::ComplexNatural, &c).unwrap().powi(2);
            let want = integral_oracle(lam, &freqs, &c);
            assert!((got - want).abs() < 1e-9 * want.max(1.0), "{got} {want}");
        }
    }

    #[test]
    fn alternating_tail_examples() {
        let ns: Vec<usize> = (1..=1000).collect();
        for &a in &[0.25, 0.5, 0.75] {
            let s = alternating_tail_series(a, &ns).unwrap();
            assert!(s.iter().all(|t| t.weight_integral > 0.0 && t.a_n > 0.0));
            assert!(s.iter().all(|t| t.lower_band_holds()), "α={a}");
            assert!(s[1..5].iter().all(|t| t.upper_band_holds()));
            assert!(s[5..].iter().all(|t| !t.upper_band_holds()));
            let big = alternating_tail_series(a, &[100, 10_000]).unwrap();
            let scaled = |t: &AlternatingTail| (t.n as f64).powf((1.0 - a) / 2.0) * t.r_n.unwrap();
            // R_n = O(n^{α-1}), so the scaled value decays only like n^{-(1-α)/2}.
            assert!(scaled(&big[1]) < 0.6 * scaled(&big[0]), "α={a}");
            assert!(scaled(&big[1]) > 1e-2 * scaled(&big[0]), "α={a}");
            // n^{(1-α)/2} A_n creeps up toward Beta((1-α)/2, α).
            let st = alternating_tail_series(a, &[1 << 8, 1 << 10, 1 << 12, 1 << 14]).unwrap();
            let c = |t: &AlternatingTail| t.a_n * (t.n as f64).powf((1.0 - a) / 2.0);
            let beta = statrs::function::beta::beta((1.0 - a) / 2.0, a);
            for w in st.windows(2) {
                assert!(c(&w[0]) < c(&w[1]) && c(&w[1]) < beta);
            }
            assert!(c(&st[3]) / beta > 0.7);
            // The weight integral itself stabilizes quickly.
            assert!((st[2].weight_integral / st[1].weight_integral - 1.0).abs() < 1e-4);
        }
    }

    #[test]
    fn weight_integral_limit_matches_classical_value() {
        // ∫₀^∞ cos(πx) x^{-α} dx = Γ(1-α) sin(πα/2) π^{α-1}.
        for &a in &[0.25, 0.5, 0.75] {
            let want = statrs::function::gamma::gamma(1.0 - a) * (PI * a / 2.0).sin() * PI.powf(a - 1.0);
            let got = weight_integral_limit(a, 1 << 13).unwrap();
            assert!((got / want - 1.0).abs() < 1e-6, "α={a}: {got} vs {want}");
        }
    }

    #[test]
    fn fm_norm_base_case() {
        let t = WeightFourierTable::build(p(-0.5), 10, DEFAULT_TOL).unwrap();
        assert!((fm_norm(&t, 1).unwrap() - t.get(0).sqrt()).abs() < 1e-15);
        let t = WeightFourierTable::build(p(0.5), 10, DEFAULT_TOL).unwrap();
        assert!(fm_norm(&t, 1).is_err());
    }

    #[test]
    fn cache_round_trip() {
        let t = WeightFourierTable::build(p(-0.37), 64, DEFAULT_TOL).unwrap();
        let back = WeightFourierTable::from_cache_str(&t.to_cache_string()).unwrap();
        assert_eq!(back, t);
        let dir = std::env::temp_dir().join(format!("condlab-cache-test-{}", std::process::id()));
        let a = WeightFourierTable::load_or_build_in(&dir, p(-0.37), 64, DEFAULT_TOL).unwrap();
        let b = WeightFourierTable::load_or_build_in(&dir, p(-0.37), 64, DEFAULT_TOL).unwrap();
        assert_eq!(a, b);
        std::fs::remove_dir_all(&dir).ok();
    }

    #[test]
    fn grams_positive_definite_up_to_512() {
        for &l in &[-0.9, -0.5, 0.5, 0.9] {
            let t = WeightFourierTable::build(p(l), 1024, DEFAULT_TOL).unwrap();
            for arr in [Arrangement::ComplexNatural, Arrangement::RealNatural] {
                let g = gram_matrix(&t, 511, arr).unwrap();
                assert!(crate::linalg::cholesky(&g).is_ok(), "λ={l} {arr:?}");
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn gram_pd_and_even(lam in -0.9f64..0.9, half in 0usize..40) {
            let dim = 2 * half + 1;
            let t = WeightFourierTable::build(p(lam), 2 * dim, DEFAULT_TOL).unwrap();
            for arr in [Arrangement::RawInteger, Arrangement::ComplexNatural, Arrangement::RealNatural] {
                let g = gram_matrix(&t, dim, arr).unwrap();
                prop_assert!(crate::linalg::cholesky(&g).is_ok());
            }
            for n in 0..=(2 * dim) as i64 {
                prop_assert_eq!(t.get(n), t.get(-n));
            }
        }

        #[test]
        fn negative_exponent_coefficients_positive(alpha in 0.05f64..0.95) {
            let t = WeightFourierTable::build(p(-alpha), 512, DEFAULT_TOL).unwrap();
            prop_assert!(t.coeffs().iter().all(|&c| c > 0.0));
        }
    }
}

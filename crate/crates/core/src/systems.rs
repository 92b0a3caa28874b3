//! Finite sections of biorthogonal systems, described by a norm oracle on
//! coefficient vectors, and the constructions built from them.

use std::sync::{Arc, OnceLock};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{dot, SymMatrix};
use crate::spaces::{space_norm, SpaceSpec};
use crate::weight::{gram_matrix, h_norm, Arrangement, WeightFourierTable, WeightParams, DEFAULT_TOL};

/// Largest order for which a dense Gram matrix is materialized on request.
pub const DENSE_GRAM_CAP: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Field {
    Real,
    Complex,
}

/// Norm used to glue the summands of a direct sum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum OuterRule {
    /// `⊕₂` of two Hilbertian systems.
    Hilbert,
    Lp { p: f64 },
}

/// Consecutive intervals `σ_1 < σ_2 < …` with the averaging vectors of a space.
#[derive(Debug, Clone, PartialEq)]
pub struct Partition {
    sizes: Vec<usize>,
    starts: Vec<usize>,
    lambdas: Vec<f64>,
    space: SpaceSpec,
}

impl Partition {
    pub fn new(sizes: Vec<usize>, space: &SpaceSpec) -> Result<Self> {
        if sizes.is_empty() || sizes.contains(&0) {
            return Err(Error::InvalidParameter("partition sizes must be positive".into()));
        }
        let mut starts = Vec::with_capacity(sizes.len());
        let mut acc = 0;
        for &s in &sizes {
            starts.push(acc);
            acc += s;
        }
        let lambdas = sizes.iter().map(|&s| space_norm(space, &vec![1.0; s])).collect::<Result<_>>()?;
        Ok(Partition { sizes, starts, lambdas, space: space.clone() })
    }

    /// `|σ_n| = 2^n`, `n = 1..=blocks`.
    pub fn dyadic(blocks: usize, space: &SpaceSpec) -> Result<Self> {
        Self::new((1..=blocks).map(|n| 1usize << n).collect(), space)
    }

    /// Number of blocks.
    pub fn len(&self) -> usize {
        self.sizes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sizes.is_empty()
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn space(&self) -> &SpaceSpec {
        &self.space
    }

    /// Total number of coordinates covered.
    pub fn dim(&self) -> usize {
        self.starts.last().unwrap() + self.sizes.last().unwrap()
    }

    /// 0-based coordinate range of block `n` (0-based).
    pub fn block(&self, n: usize) -> std::ops::Range<usize> {
        self.starts[n]..self.starts[n] + self.sizes[n]
    }

    /// Number of whole blocks inside the first `m` coordinates.
    pub fn blocks_within(&self, m: usize) -> usize {
        (0..self.len()).take_while(|&n| self.block(n).end <= m).count()
    }

    /// Smallest `D` with `Σ_{i<m} |σ_i| ≤ D |σ_m|` for every `m`.
    pub fn condition_a_constant(&self) -> f64 {
        (0..self.len()).map(|m| self.starts[m] as f64 / self.sizes[m] as f64).fold(0.0, f64::max)
    }

    /// `Λ_{|σ_n|}`.
    pub fn lambda(&self, n: usize) -> f64 {
        self.lambdas[n]
    }

    /// `v_n = Λ^{-1} 1_{σ_n}` as a vector of length `dim()`.
    pub fn v(&self, n: usize) -> Vec<f64> {
        let mut out = vec![0.0; self.dim()];
        out[self.block(n)].fill(1.0 / self.lambdas[n]);
        out
    }

    /// `v_n^* = (Λ/|σ_n|) 1_{σ_n}`.
    pub fn v_star(&self, n: usize) -> Vec<f64> {
        let mut out = vec![0.0; self.dim()];
        out[self.block(n)].fill(self.lambdas[n] / self.sizes[n] as f64);
        out
    }

    /// `⟨v_n^*, f⟩` for every block; `f` may be shorter than `dim()`.
    pub fn coefficients(&self, f: &[f64]) -> Vec<f64> {
        (0..self.len())
            .map(|n| {
                let r = self.block(n);
                let s: f64 = f.iter().take(r.end).skip(r.start).sum();
                s * self.lambdas[n] / self.sizes[n] as f64
            })
            .collect()
    }

    /// `Σ_n b_n v_n`.
    pub fn synthesize(&self, b: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dim()];
        for (n, &c) in b.iter().enumerate().take(self.len()) {
            out[self.block(n)].fill(c / self.lambdas[n]);
        }
        out
    }
}

/// `(P_σ f, Q_σ f)` with `P_σ f = Σ ⟨v_n^*, f⟩ v_n` and `Q_σ = I - P_σ`.
pub fn averaging_projection(sigma: &Partition, f: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    if f.len() > sigma.dim() {
        return Err(Error::DimensionMismatch { expected: sigma.dim(), found: f.len() });
    }
    let p = sigma.synthesize(&sigma.coefficients(f));
    let q = (0..sigma.dim()).map(|i| f.get(i).copied().unwrap_or(0.0) - p[i]).collect();
    Ok((p, q))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PairingReport {
    pub samples: usize,
    pub max_p_error: f64,
    pub max_q_error: f64,
}

/// Checks `⟨f, P g⟩ = ⟨P f, g⟩` and the same for `Q` on random pairs.
pub fn dual_pairing_check(sigma: &Partition, samples: usize, seed: u64) -> Result<PairingReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = sigma.dim();
    let mut rep = PairingReport { samples, max_p_error: 0.0, max_q_error: 0.0 };
    for _ in 0..samples {
        let f: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let g: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let (pf, qf) = averaging_projection(sigma, &f)?;
        let (pg, qg) = averaging_projection(sigma, &g)?;
        let scale = 1.0 + dot(&f, &f).sqrt() * dot(&g, &g).sqrt();
        rep.max_p_error = rep.max_p_error.max((dot(&f, &pg) - dot(&pf, &g)).abs() / scale);
        rep.max_q_error = rep.max_q_error.max((dot(&f, &qg) - dot(&qf, &g)).abs() / scale);
    }
    Ok(rep)
}

/// One summand of a [`Oracle::WeightedSum`]: a system read off the listed coordinates.
#[derive(Debug, Clone)]
pub struct Part {
    pub system: Arc<FiniteSystem>,
    pub coords: Vec<usize>,
}

#[derive(Debug, Clone)]
pub enum Oracle {
    /// `sqrt(aᵀ G a)`.
    Gram(Arc<SymMatrix>),
    /// Trigonometric system in `H_λ`, evaluated as a Toeplitz form without a dense matrix.
    Trig { table: Arc<WeightFourierTable>, arrangement: Arrangement },
    Sequence(SpaceSpec),
    /// `‖Q_σ f‖_S + ‖Σ ⟨v_n^*, f⟩ x_n‖_X`.
    Dkk { inner: Arc<FiniteSystem>, partition: Partition },
    /// `‖Σ b_n v_n‖_S`: the averaging basis of `P_σ(S)`.
    Averaging(Partition),
    /// `(Σ_j ‖a|_{part j}‖^p)^{1/p}`.
    WeightedSum { parts: Vec<Part>, p: f64 },
    /// Coefficients `b` of the rotated system are mapped to `a = R b` for the inner system.
    Rotated(Arc<FiniteSystem>),
}

#[derive(Debug, Clone)]
pub struct FiniteSystem {
    dim: usize,
    oracle: Oracle,
    label: String,
    gram: OnceLock<Option<Arc<SymMatrix>>>,
}

/// `a = R b` for the pairwise rotation.
pub fn rotation_map(b: &[f64]) -> Vec<f64> {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let mut a = b.to_vec();
    for k in 0..b.len() / 2 {
        let (x, y) = (b[2 * k], b[2 * k + 1]);
        a[2 * k] = s * (x + y);
        a[2 * k + 1] = s * (y - x);
    }
    if b.len() % 2 == 1 {
        // A trailing odd coordinate pairs with an implicit zero.
        let x = b[b.len() - 1];
        a[b.len() - 1] = s * x;
        a.push(-s * x);
    }
    a
}

impl FiniteSystem {
    pub fn new(dim: usize, oracle: Oracle, label: impl Into<String>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidParameter("dimension must be at least 1".into()));
        }
        if let Oracle::Gram(g) = &oracle {
            if g.order() != dim {
                return Err(Error::DimensionMismatch { expected: dim, found: g.order() });
            }
        }
        Ok(FiniteSystem { dim, oracle, label: label.into(), gram: OnceLock::new() })
    }

    pub fn from_gram(g: SymMatrix, label: impl Into<String>) -> Result<Self> {
        crate::linalg::cholesky(&g)?;
        Self::new(g.order(), Oracle::Gram(Arc::new(g)), label)
    }

    pub fn orthonormal(dim: usize) -> Self {
        Self::new(dim, Oracle::Gram(Arc::new(SymMatrix::identity(dim))), format!("orthonormal({dim})")).unwrap()
    }

    pub fn sequence(space: SpaceSpec, dim: usize) -> Result<Self> {
        space.validate()?;
        let label = format!("{space}[{dim}]");
        Self::new(dim, Oracle::Sequence(space), label)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn oracle(&self) -> &Oracle {
        &self.oracle
    }

    /// Norm of `Σ a_n x_n`; `a` may be shorter than the dimension.
    pub fn norm(&self, a: &[f64]) -> Result<f64> {
        if a.len() > self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, found: a.len() });
        }
        match &self.oracle {
            Oracle::Gram(g) => {
                let mut x = a.to_vec();
                x.resize(self.dim, 0.0);
                Ok(g.quad_form(&x).max(0.0).sqrt())
            }
            Oracle::Trig { table, arrangement } => {
                let keep = a.iter().rposition(|&x| x != 0.0).map_or(0, |i| i + 1);
                let mut x = a[..keep].to_vec();
                match arrangement {
                    Arrangement::RawInteger => x.resize(self.dim, 0.0),
                    _ if x.is_empty() => return Ok(0.0),
                    _ => {}
                }
                h_norm(table, *arrangement, &x)
            }
            Oracle::Sequence(s) => space_norm(s, a),
            Oracle::Dkk { inner, partition } => {
                let (_, q) = averaging_projection(partition, a)?;
                Ok(space_norm(partition.space(), &q)? + inner.norm(&partition.coefficients(a))?)
            }
            Oracle::Averaging(partition) => space_norm(partition.space(), &partition.synthesize(a)),
            Oracle::WeightedSum { parts, p } => {
                let mut vals = Vec::with_capacity(parts.len());
                for part in parts {
                    let x: Vec<f64> = part.coords.iter().map(|&c| a.get(c).copied().unwrap_or(0.0)).collect();
                    vals.push(part.system.norm(&x)?);
                }
                Ok(combine(&vals, *p))
            }
            Oracle::Rotated(inner) => inner.norm(&rotation_map(a)),
        }
    }

    /// Whether the oracle is an inner-product norm.
    pub fn is_hilbert(&self) -> bool {
        match &self.oracle {
            Oracle::Gram(_) | Oracle::Trig { .. } => true,
            Oracle::Sequence(s) | Oracle::Averaging(Partition { space: s, .. }) => *s == SpaceSpec::lp(2.0),
            Oracle::Dkk { .. } => false,
            Oracle::WeightedSum { parts, p } => *p == 2.0 && parts.iter().all(|q| q.system.is_hilbert()),
            Oracle::Rotated(inner) => inner.is_hilbert(),
        }
    }

    /// Dense Gram matrix when the oracle is Hilbertian and the order is at most [`DENSE_GRAM_CAP`].
    pub fn gram(&self) -> Option<Arc<SymMatrix>> {
        self.gram
            .get_or_init(|| {
                if !self.is_hilbert() || self.dim > DENSE_GRAM_CAP {
                    return None;
                }
                self.build_gram().ok().map(Arc::new)
            })
            .clone()
    }

    fn build_gram(&self) -> Result<SymMatrix> {
        Ok(match &self.oracle {
            Oracle::Gram(g) => (**g).clone(),
            Oracle::Trig { table, arrangement } => gram_matrix(table, self.dim, *arrangement)?,
            Oracle::Sequence(_) | Oracle::Averaging(_) => SymMatrix::identity(self.dim),
            Oracle::WeightedSum { parts, .. } => {
                let mut g = SymMatrix::zeros(self.dim);
                for part in parts {
                    let gp = part.system.gram().ok_or_else(|| Error::IncompatibleOracles(part.system.label.clone()))?;
                    for (i, &ci) in part.coords.iter().enumerate() {
                        for (j, &cj) in part.coords.iter().enumerate().skip(i) {
                            g.set(ci, cj, gp.get(i, j));
                        }
                    }
                }
                g
            }
            Oracle::Rotated(inner) => {
                let g = inner.gram().ok_or_else(|| Error::IncompatibleOracles(inner.label.clone()))?;
                let n = self.dim;
                let mut r = vec![0.0; n * n];
                for j in 0..n {
                    let mut e = vec![0.0; n];
                    e[j] = 1.0;
                    for (i, v) in rotation_map(&e).into_iter().enumerate().take(n) {
                        r[i * n + j] = v;
                    }
                }
                g.congruence(&r)
            }
            Oracle::Dkk { .. } => return Err(Error::IncompatibleOracles(self.label.clone())),
        })
    }
}

fn combine(vals: &[f64], p: f64) -> f64 {
    if p.is_infinite() {
        vals.iter().cloned().fold(0.0, f64::max)
    } else if p == 2.0 {
        vals.iter().map(|v| v * v).sum::<f64>().sqrt()
    } else {
        vals.iter().map(|v| v.powf(p)).sum::<f64>().powf(1.0 / p)
    }
}

/// Trigonometric system of dimension `n` in `H_λ`; the real field uses `1, cos, sin, …`.
pub fn trig_system(params: WeightParams, n: usize, arrangement: Arrangement, field: Field) -> Result<FiniteSystem> {
    let arrangement = match field {
        Field::Real => Arrangement::RealNatural,
        Field::Complex if arrangement == Arrangement::RealNatural => {
            return Err(Error::InvalidParameter("complex field needs a complex arrangement".into()))
        }
        Field::Complex => arrangement,
    };
    if n == 0 || (arrangement == Arrangement::RawInteger && n % 2 == 0) {
        return Err(Error::DimensionMismatch { expected: n | 1, found: n });
    }
    let table = WeightFourierTable::load_or_build(params, 2 * arrangement.max_frequency(n), DEFAULT_TOL)?;
    trig_system_from_table(Arc::new(table), n, arrangement)
}

/// Trigonometric system sharing an existing coefficient table.
pub fn trig_system_from_table(table: Arc<WeightFourierTable>, n: usize, arrangement: Arrangement) -> Result<FiniteSystem> {
    let label = format!("trig({},{},{:?})", table.params.lambda, n, arrangement);
    FiniteSystem::new(n, Oracle::Trig { table, arrangement }, label)
}

/// Interleaving `S1 ⊕ S2`: odd positions from `S1`, even from `S2`, then the longer tail.
pub fn direct_sum(s1: Arc<FiniteSystem>, s2: Arc<FiniteSystem>, rule: OuterRule) -> Result<FiniteSystem> {
    let p = match rule {
        OuterRule::Hilbert => {
            if !(s1.is_hilbert() && s2.is_hilbert()) {
                return Err(Error::IncompatibleOracles(format!("⊕₂ of {} and {}", s1.label, s2.label)));
            }
            2.0
        }
        OuterRule::Lp { p } => {
            if !(p >= 1.0) {
                return Err(Error::InvalidParameter(format!("outer p = {p}")));
            }
            p
        }
    };
    let (n1, n2) = (s1.dim, s2.dim);
    let (mut c1, mut c2) = (Vec::with_capacity(n1), Vec::with_capacity(n2));
    let mut pos = 0;
    for i in 0..n1.max(n2) {
        if i < n1 {
            c1.push(pos);
            pos += 1;
        }
        if i < n2 {
            c2.push(pos);
            pos += 1;
        }
    }
    let label = format!("({} ⊕ {})", s1.label, s2.label);
    FiniteSystem::new(n1 + n2, Oracle::WeightedSum { parts: vec![Part { system: s1, coords: c1 }, Part { system: s2, coords: c2 }], p }, label)
}

/// `y_{2n-1} = (x_{2n-1} - x_{2n})/√2`, `y_{2n} = (x_{2n-1} + x_{2n})/√2`.
pub fn rotate(s: Arc<FiniteSystem>) -> Result<FiniteSystem> {
    if s.dim % 2 == 1 {
        return Err(Error::OddDimension(s.dim));
    }
    let label = format!("rot({})", s.label);
    FiniteSystem::new(s.dim, Oracle::Rotated(s), label)
}

/// `(S1 ⊕ S2)` rotated.
pub fn diamond(s1: Arc<FiniteSystem>, s2: Arc<FiniteSystem>) -> Result<FiniteSystem> {
    let rule = if s1.is_hilbert() && s2.is_hilbert() { OuterRule::Hilbert } else { OuterRule::Lp { p: 2.0 } };
    let sum = direct_sum(s1, s2, rule)?;
    let label = format!("({}) ⋄", sum.label);
    let mut out = rotate(Arc::new(sum))?;
    out.label = label;
    Ok(out)
}

/// `⊕_j X^{(m_j)}` with an `ℓ_p` outer norm; each block is a prefix of `S`.
pub fn prefix_sum_system(s: Arc<FiniteSystem>, sizes: &[usize], p: f64) -> Result<FiniteSystem> {
    if sizes.is_empty() || sizes.contains(&0) {
        return Err(Error::InvalidParameter("block sizes must be positive".into()));
    }
    if let Some(&m) = sizes.iter().find(|&&m| m > s.dim) {
        return Err(Error::BlockOverrun { size: m, dim: s.dim });
    }
    if !(p >= 1.0) {
        return Err(Error::InvalidParameter(format!("outer p = {p}")));
    }
    let mut parts = Vec::with_capacity(sizes.len());
    let mut pos = 0;
    for &m in sizes {
        parts.push(Part { system: s.clone(), coords: (pos..pos + m).collect() });
        pos += m;
    }
    let label = format!("prefix({}, {:?}, {p})", s.label, sizes);
    FiniteSystem::new(pos, Oracle::WeightedSum { parts, p }, label)
}

/// `Y[X, S, σ]` on the coordinates covered by `σ`.
pub fn dkk_system(x: Arc<FiniteSystem>, sigma: Partition) -> Result<FiniteSystem> {
    if sigma.len() > x.dim {
        return Err(Error::DimensionMismatch { expected: x.dim, found: sigma.len() });
    }
    let label = format!("Y[{}, {}, {:?}]", x.label, sigma.space(), sigma.sizes());
    FiniteSystem::new(sigma.dim(), Oracle::Dkk { inner: x, partition: sigma }, label)
}

/// The averaging basis `(v_n)` of `P_σ(S)`.
pub fn averaging_system(sigma: Partition) -> Result<FiniteSystem> {
    let label = format!("V[{}, {:?}]", sigma.space(), sigma.sizes());
    FiniteSystem::new(sigma.len(), Oracle::Averaging(sigma), label)
}

/// `Y[B ⊕ V, S, σ]` with dyadic `σ` of `blocks` blocks and `V` the averaging basis.
pub fn almost_greedy_system(b: Arc<FiniteSystem>, space: &SpaceSpec, blocks: usize) -> Result<FiniteSystem> {
    let sigma = Partition::dyadic(blocks, space)?;
    let (nb, nv) = (blocks.div_ceil(2), blocks / 2);
    if nb > b.dim {
        return Err(Error::DimensionMismatch { expected: nb, found: b.dim });
    }
    let vb = if nv == 0 { None } else { Some(Arc::new(averaging_system(Partition::dyadic(nv, space)?)?)) };
    let b_prefix = Arc::new(prefix_sum_system(b, &[nb], 2.0)?);
    let inner = match vb {
        None => b_prefix,
        Some(v) => {
            let rule = if b_prefix.is_hilbert() && v.is_hilbert() { OuterRule::Hilbert } else { OuterRule::Lp { p: 2.0 } };
            Arc::new(direct_sum(b_prefix, v, rule)?)
        }
    };
    dkk_system(inner, sigma)
}

/// Constructor tree for reproducible system descriptions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SystemSpec {
    Orthonormal { dim: usize },
    Gram { rows: Vec<Vec<f64>> },
    Trig { lambda: f64, dim: usize, arrangement: Arrangement },
    Sequence { space: SpaceSpec, dim: usize },
    DirectSum { left: Box<SystemSpec>, right: Box<SystemSpec>, rule: OuterRule },
    Rotate { inner: Box<SystemSpec> },
    Diamond { left: Box<SystemSpec>, right: Box<SystemSpec> },
    PrefixSum { inner: Box<SystemSpec>, sizes: Vec<usize>, p: f64 },
    Dkk { inner: Box<SystemSpec>, space: SpaceSpec, sizes: Vec<usize> },
    AlmostGreedy { inner: Box<SystemSpec>, space: SpaceSpec, blocks: usize },
}

impl SystemSpec {
    pub fn build(&self) -> Result<FiniteSystem> {
        let arc = |s: &SystemSpec| s.build().map(Arc::new);
        match self {
            SystemSpec::Orthonormal { dim } => {
                if *dim == 0 {
                    return Err(Error::InvalidParameter("dimension must be at least 1".into()));
                }
                Ok(FiniteSystem::orthonormal(*dim))
            }
            SystemSpec::Gram { rows } => FiniteSystem::from_gram(SymMatrix::from_rows(rows)?, "gram"),
            SystemSpec::Trig { lambda, dim, arrangement } => {
                let field = if *arrangement == Arrangement::RealNatural { Field::Real } else { Field::Complex };
                trig_system(WeightParams::new(*lambda)?, *dim, *arrangement, field)
            }
            SystemSpec::Sequence { space, dim } => FiniteSystem::sequence(space.clone(), *dim),
            SystemSpec::DirectSum { left, right, rule } => direct_sum(arc(left)?, arc(right)?, *rule),
            SystemSpec::Rotate { inner } => rotate(arc(inner)?),
            SystemSpec::Diamond { left, right } => diamond(arc(left)?, arc(right)?),
            SystemSpec::PrefixSum { inner, sizes, p } => prefix_sum_system(arc(inner)?, sizes, *p),
            SystemSpec::Dkk { inner, space, sizes } => dkk_system(arc(inner)?, Partition::new(sizes.clone(), space)?),
            SystemSpec::AlmostGreedy { inner, space, blocks } => almost_greedy_system(arc(inner)?, space, *blocks),
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("system specs serialize")
    }

    /// `T^R` in `H_{-β}` ⋄ `T^R` in `H_α`, each of dimension `n`.
    pub fn aa_diamond(beta: f64, alpha: f64, n: usize) -> Self {
        SystemSpec::Diamond {
            left: Box::new(SystemSpec::Trig { lambda: -beta, dim: n, arrangement: Arrangement::RealNatural }),
            right: Box::new(SystemSpec::Trig { lambda: alpha, dim: n, arrangement: Arrangement::RealNatural }),
        }
    }
}

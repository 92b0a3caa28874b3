//! Dense real symmetric linear algebra.
//!
//! Complex Hermitian problems are handled through the real embedding
//! `[[Re, -Im], [Im, Re]]` of order `2n`, so a single real code path serves
//! both fields. Eigenvectors come from cyclic Jacobi; eigenvalue-only queries
//! go through Householder tridiagonalization and implicit QL, which is much
//! faster at the orders used by the growth experiments (up to about 2000).

use crate::error::{Error, Result};

/// Relative pivot threshold below which a matrix is declared not positive definite.
pub const PD_TOL: f64 = 1e-13;
/// Default sweep cap for the Jacobi eigensolver.
pub const DEFAULT_MAX_SWEEPS: usize = 64;
/// Orders above this are accepted but slow for `sym_eig` (Jacobi is O(n^3) per sweep).
pub const JACOBI_ORDER_CAP: usize = 2048;

/// Dense symmetric matrix stored in full row-major order.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix {
    n: usize,
    data: Vec<f64>,
}

impl SymMatrix {
    pub fn zeros(n: usize) -> Self {
        SymMatrix { n, data: vec![0.0; n * n] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    pub fn diagonal(d: &[f64]) -> Self {
        let mut m = Self::zeros(d.len());
        for (i, &x) in d.iter().enumerate() {
            m.data[i * d.len() + i] = x;
        }
        m
    }

    /// Builds a matrix from `f(i, j)` evaluated on the upper triangle and mirrored.
    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            for j in i..n {
                let v = f(i, j);
                m.data[i * n + j] = v;
                m.data[j * n + i] = v;
            }
        }
        m
    }

    /// Builds a matrix from rows; symmetry must hold exactly.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        if n == 0 {
            return Err(Error::InvalidParameter("empty matrix".into()));
        }
        let mut data = Vec::with_capacity(n * n);
        for r in rows {
            if r.len() != n {
                return Err(Error::DimensionMismatch { expected: n, found: r.len() });
            }
            data.extend_from_slice(r);
        }
        for i in 0..n {
            for j in 0..i {
                if data[i * n + j] != data[j * n + i] {
                    return Err(Error::InvalidParameter(format!("not symmetric at ({i},{j})")));
                }
            }
        }
        Ok(SymMatrix { n, data })
    }

    /// Real embedding of the Hermitian matrix `re + i*im` (`im` antisymmetric, row-major).
    pub fn hermitian_embedding(re: &SymMatrix, im: &[f64]) -> Result<Self> {
        let n = re.n;
        if im.len() != n * n {
            return Err(Error::DimensionMismatch { expected: n * n, found: im.len() });
        }
        for i in 0..n {
            for j in 0..=i {
                if im[i * n + j] != -im[j * n + i] {
                    return Err(Error::InvalidParameter(format!("imaginary part not antisymmetric at ({i},{j})")));
                }
            }
        }
        Ok(Self::from_fn(2 * n, |i, j| match (i < n, j < n) {
            (true, true) => re.get(i, j),
            (false, false) => re.get(i - n, j - n),
            (true, false) => -im[i * n + (j - n)],
            (false, true) => im[(i - n) * n + j],
        }))
    }

    pub fn order(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    /// Sets entry (i, j) and its mirror.
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.n + j] = v;
        self.data[j * self.n + i] = v;
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn frobenius(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    pub fn max_diag(&self) -> f64 {
        (0..self.n).map(|i| self.get(i, i)).fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn mat_vec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n).map(|i| dot(self.row(i), x)).collect()
    }

    /// `xᵀ A x`.
    pub fn quad_form(&self, x: &[f64]) -> f64 {
        let mut s = 0.0;
        for i in 0..self.n {
            if x[i] != 0.0 {
                s += x[i] * dot(self.row(i), x);
            }
        }
        s
    }

    /// Principal submatrix on the given indices (in the given order).
    pub fn submatrix(&self, idx: &[usize]) -> SymMatrix {
        let k = idx.len();
        let mut m = SymMatrix::zeros(k);
        for (a, &i) in idx.iter().enumerate() {
            for (b, &j) in idx.iter().enumerate() {
                m.data[a * k + b] = self.get(i, j);
            }
        }
        m
    }

    /// Leading principal submatrix of order `k`.
    pub fn leading(&self, k: usize) -> SymMatrix {
        let idx: Vec<usize> = (0..k).collect();
        self.submatrix(&idx)
    }

    pub fn scaled(&self, c: f64) -> SymMatrix {
        SymMatrix { n: self.n, data: self.data.iter().map(|x| x * c).collect() }
    }

    /// `Pᵀ A P` for a square (not necessarily symmetric) `P` given row-major.
    pub fn congruence(&self, p: &[f64]) -> SymMatrix {
        let n = self.n;
        let mut ap = vec![0.0; n * n];
        for i in 0..n {
            let row = self.row(i);
            let out = &mut ap[i * n..(i + 1) * n];
            for (k, &a) in row.iter().enumerate() {
                if a != 0.0 {
                    let prow = &p[k * n..(k + 1) * n];
                    for j in 0..n {
                        out[j] += a * prow[j];
                    }
                }
            }
        }
        let mut res = SymMatrix::zeros(n);
        for k in 0..n {
            let prow = &p[k * n..(k + 1) * n];
            let aprow = &ap[k * n..(k + 1) * n];
            for i in 0..n {
                if prow[i] != 0.0 {
                    let c = prow[i];
                    let out = &mut res.data[i * n..(i + 1) * n];
                    for j in 0..n {
                        out[j] += c * aprow[j];
                    }
                }
            }
        }
        // Symmetrize away rounding asymmetry so the stored matrix is exactly symmetric.
        for i in 0..n {
            for j in 0..i {
                let v = 0.5 * (res.data[i * n + j] + res.data[j * n + i]);
                res.data[i * n + j] = v;
                res.data[j * n + i] = v;
            }
        }
        res
    }
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut s = 0.0;
    for (x, y) in a.iter().zip(b) {
        s += x * y;
    }
    s
}

/// Lower-triangular Cholesky factor, row-major.
#[derive(Debug, Clone)]
pub struct Cholesky {
    n: usize,
    l: Vec<f64>,
}

impl Cholesky {
    pub fn order(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.l[i * self.n + j]
    }

    /// Dense lower-triangular factor as rows.
    pub fn factor(&self) -> Vec<Vec<f64>> {
        (0..self.n).map(|i| self.l[i * self.n..(i + 1) * self.n].to_vec()).collect()
    }

    /// Solves `L y = b`.
    pub fn solve_lower(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut y = b.to_vec();
        for i in 0..n {
            let s = dot(&self.l[i * n..i * n + i], &y[..i]);
            y[i] = (y[i] - s) / self.l[i * n + i];
        }
        y
    }

    /// Solves `Lᵀ x = y`.
    pub fn solve_upper(&self, y: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut x = y.to_vec();
        for i in (0..n).rev() {
            x[i] /= self.l[i * n + i];
            let xi = x[i];
            for k in 0..i {
                x[k] -= self.l[i * n + k] * xi;
            }
        }
        x
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        self.solve_upper(&self.solve_lower(b))
    }

    /// `L⁻¹ M L⁻ᵀ` for symmetric `M`, formed with two row-oriented forward substitutions.
    pub fn reduce(&self, m: &SymMatrix) -> SymMatrix {
        let n = self.n;
        let y = self.forward_rows(m.data.clone());
        let mut yt = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                yt[j * n + i] = y[i * n + j];
            }
        }
        let c = self.forward_rows(yt);
        let mut out = SymMatrix { n, data: c };
        for i in 0..n {
            for j in 0..i {
                let v = 0.5 * (out.data[i * n + j] + out.data[j * n + i]);
                out.data[i * n + j] = v;
                out.data[j * n + i] = v;
            }
        }
        out
    }

    /// Applies `L⁻¹` to every column of the row-major matrix `b`.
    fn forward_rows(&self, mut b: Vec<f64>) -> Vec<f64> {
        let n = self.n;
        for i in 0..n {
            let (done, rest) = b.split_at_mut(i * n);
            let row = &mut rest[..n];
            for k in 0..i {
                let lik = self.l[i * n + k];
                if lik != 0.0 {
                    let src = &done[k * n..(k + 1) * n];
                    for j in 0..n {
                        row[j] -= lik * src[j];
                    }
                }
            }
            let d = self.l[i * n + i];
            for v in row.iter_mut() {
                *v /= d;
            }
        }
        b
    }

    /// Inverse of the factored matrix.
    pub fn inverse(&self) -> SymMatrix {
        let n = self.n;
        let mut inv = SymMatrix::zeros(n);
        let mut e = vec![0.0; n];
        for j in 0..n {
            e.iter_mut().for_each(|x| *x = 0.0);
            e[j] = 1.0;
            let col = self.solve(&e);
            for i in j..n {
                inv.data[i * n + j] = col[i];
            }
        }
        for i in 0..n {
            for j in (i + 1)..n {
                inv.data[i * n + j] = inv.data[j * n + i];
            }
        }
        inv
    }
}

/// Cholesky factorization `A = L Lᵀ`.
pub fn cholesky(a: &SymMatrix) -> Result<Cholesky> {
    let n = a.n;
    let tol = PD_TOL * a.max_diag().max(0.0);
    let mut l = vec![0.0; n * n];
    for j in 0..n {
        let s = dot(&l[j * n..j * n + j], &l[j * n..j * n + j]);
        let pivot = a.get(j, j) - s;
        if !(pivot > tol) {
            return Err(Error::NotPositiveDefinite(j));
        }
        let d = pivot.sqrt();
        l[j * n + j] = d;
        for i in (j + 1)..n {
            let s = dot(&l[i * n..i * n + j], &l[j * n..j * n + j]);
            l[i * n + j] = (a.get(i, j) - s) / d;
        }
    }
    Ok(Cholesky { n, l })
}

/// Solves `A x = b` for positive definite `A`.
pub fn solve_spd(a: &SymMatrix, b: &[f64]) -> Result<Vec<f64>> {
    if b.len() != a.n {
        return Err(Error::DimensionMismatch { expected: a.n, found: b.len() });
    }
    Ok(cholesky(a)?.solve(b))
}

/// Eigen-decomposition with eigenvalues in descending order.
#[derive(Debug, Clone)]
pub struct Eigen {
    pub values: Vec<f64>,
    /// `vectors[k]` is the unit eigenvector for `values[k]`.
    pub vectors: Vec<Vec<f64>>,
}

pub fn sym_eig(a: &SymMatrix) -> Result<Eigen> {
    sym_eig_with(a, DEFAULT_MAX_SWEEPS)
}

/// Cyclic Jacobi with threshold sweeps.
pub fn sym_eig_with(a: &SymMatrix, max_sweeps: usize) -> Result<Eigen> {
    let n = a.n;
    let mut m = a.data.clone();
    let mut v = SymMatrix::identity(n).data;
    let mut d: Vec<f64> = (0..n).map(|i| m[i * n + i]).collect();
    let mut b = d.clone();
    let mut z = vec![0.0; n];
    let mut converged = n <= 1;
    for sweep in 1..=max_sweeps {
        if converged {
            break;
        }
        let mut sm = 0.0;
        for p in 0..n {
            for q in (p + 1)..n {
                sm += m[p * n + q].abs();
            }
        }
        if sm == 0.0 {
            converged = true;
            break;
        }
        let tresh = if sweep < 4 { 0.2 * sm / (n * n) as f64 } else { 0.0 };
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[p * n + q];
                let g = 100.0 * apq.abs();
                if sweep > 4 && d[p].abs() + g == d[p].abs() && d[q].abs() + g == d[q].abs() {
                    m[p * n + q] = 0.0;
                } else if apq.abs() > tresh {
                    let h = d[q] - d[p];
                    let t = if h.abs() + g == h.abs() {
                        apq / h
                    } else {
                        let theta = 0.5 * h / apq;
                        let t = 1.0 / (theta.abs() + (1.0 + theta * theta).sqrt());
                        if theta < 0.0 { -t } else { t }
                    };
                    let c = 1.0 / (1.0 + t * t).sqrt();
                    let s = t * c;
                    let tau = s / (1.0 + c);
                    let hh = t * apq;
                    z[p] -= hh;
                    z[q] += hh;
                    d[p] -= hh;
                    d[q] += hh;
                    m[p * n + q] = 0.0;
                    let rot = |m: &mut [f64], i: usize, j: usize, k: usize, l: usize| {
                        let g = m[i * n + j];
                        let h = m[k * n + l];
                        m[i * n + j] = g - s * (h + g * tau);
                        m[k * n + l] = h + s * (g - h * tau);
                    };
                    for j in 0..p {
                        rot(&mut m, j, p, j, q);
                    }
                    for j in (p + 1)..q {
                        rot(&mut m, p, j, j, q);
                    }
                    for j in (q + 1)..n {
                        rot(&mut m, p, j, q, j);
                    }
                    for j in 0..n {
                        rot(&mut v, j, p, j, q);
                    }
                }
            }
        }
        for p in 0..n {
            b[p] += z[p];
            d[p] = b[p];
            z[p] = 0.0;
        }
    }
    if !converged {
        let off: f64 = (0..n).flat_map(|p| ((p + 1)..n).map(move |q| (p, q))).map(|(p, q)| m[p * n + q].abs()).sum();
        if off != 0.0 {
            return Err(Error::NoConvergence(max_sweeps));
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| d[j].partial_cmp(&d[i]).unwrap_or(std::cmp::Ordering::Equal));
    let values = order.iter().map(|&k| d[k]).collect();
    let vectors = order.iter().map(|&k| (0..n).map(|i| v[i * n + k]).collect()).collect();
    Ok(Eigen { values, vectors })
}

/// Eigenvalues only, descending, via Householder tridiagonalization and implicit QL.
pub fn sym_eigvals(a: &SymMatrix) -> Result<Vec<f64>> {
    let n = a.n;
    if n == 0 {
        return Ok(vec![]);
    }
    let (mut d, mut e) = tridiagonalize(a);
    tql_values(&mut d, &mut e)?;
    d.sort_by(|x, y| y.partial_cmp(x).unwrap_or(std::cmp::Ordering::Equal));
    Ok(d)
}

/// Householder reduction to tridiagonal form; returns (diagonal, subdiagonal with e[0]=0).
fn tridiagonalize(src: &SymMatrix) -> (Vec<f64>, Vec<f64>) {
    let n = src.n;
    let mut a = src.data.clone();
    let mut d = vec![0.0; n];
    let mut e = vec![0.0; n];
    for i in (1..n).rev() {
        let l = i - 1;
        let mut h = 0.0;
        if l > 0 {
            let scale: f64 = (0..=l).map(|k| a[i * n + k].abs()).sum();
            if scale == 0.0 {
                e[i] = a[i * n + l];
            } else {
                for k in 0..=l {
                    a[i * n + k] /= scale;
                    h += a[i * n + k] * a[i * n + k];
                }
                let f = a[i * n + l];
                let g = if f >= 0.0 { -h.sqrt() } else { h.sqrt() };
                e[i] = scale * g;
                h -= f * g;
                a[i * n + l] = f - g;
                // p = A u / h using the lower triangle (row access through symmetry).
                let u: Vec<f64> = a[i * n..i * n + l + 1].to_vec();
                let mut p = vec![0.0; l + 1];
                for j in 0..=l {
                    let rj = &a[j * n..j * n + j + 1];
                    let uj = u[j];
                    let mut g = 0.0;
                    for k in 0..=j {
                        g += rj[k] * u[k];
                    }
                    p[j] += g;
                    // Contribution of the strictly lower part of column j to rows k < j.
                    for k in 0..j {
                        p[k] += rj[k] * uj;
                    }
                }
                let mut f = 0.0;
                for j in 0..=l {
                    p[j] /= h;
                    f += p[j] * u[j];
                }
                let hh = f / (h + h);
                for j in 0..=l {
                    p[j] -= hh * u[j];
                }
                for j in 0..=l {
                    let fj = u[j];
                    let gj = p[j];
                    let row = &mut a[j * n..j * n + j + 1];
                    for k in 0..=j {
                        row[k] -= fj * p[k] + gj * u[k];
                    }
                }
            }
        } else {
            e[i] = a[i * n + l];
        }
        let _ = h;
    }
    for i in 0..n {
        d[i] = a[i * n + i];
    }
    (d, e)
}

/// Implicit QL on a symmetric tridiagonal matrix (values only).
fn tql_values(d: &mut [f64], e: &mut [f64]) -> Result<()> {
    let n = d.len();
    for i in 1..n {
        e[i - 1] = e[i];
    }
    e[n - 1] = 0.0;
    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > 60 {
                return Err(Error::NoConvergence(60));
            }
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let (mut s, mut c, mut p) = (1.0, 1.0, 0.0);
            let mut early = false;
            let mut i = m;
            while i > l {
                i -= 1;
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    early = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
            }
            if early {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    Ok(())
}

/// Largest `λ` with `M v = λ G v`.
pub fn gen_sym_eig_max(m: &SymMatrix, g: &SymMatrix) -> Result<f64> {
    Ok(gen_sym_eig_extremes(m, g)?.0)
}

/// Largest and smallest generalized eigenvalues of the pencil `(M, G)`.
pub fn gen_sym_eig_extremes(m: &SymMatrix, g: &SymMatrix) -> Result<(f64, f64)> {
    if m.n != g.n {
        return Err(Error::DimensionMismatch { expected: g.n, found: m.n });
    }
    let ch = cholesky(g)?;
    let c = ch.reduce(m);
    let vals = sym_eigvals(&c)?;
    Ok((vals[0], vals[vals.len() - 1]))
}

/// Largest generalized eigenvalue with a maximizing vector normalized to `vᵀ G v = 1`.
pub fn gen_sym_eig_max_vec(m: &SymMatrix, g: &SymMatrix) -> Result<(f64, Vec<f64>)> {
    if m.n != g.n {
        return Err(Error::DimensionMismatch { expected: g.n, found: m.n });
    }
    let ch = cholesky(g)?;
    let c = ch.reduce(m);
    let eig = sym_eig(&c)?;
    let v = ch.solve_upper(&eig.vectors[0]);
    Ok((eig.values[0], v))
}

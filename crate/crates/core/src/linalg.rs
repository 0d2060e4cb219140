//! Dense complex linear algebra on tensor-product spaces.
//!
//! Matrices are row-major. A [`SpaceShape`] lists the local dimensions of
//! the tensor factors; factor 0 is the slowest-varying index.

use std::ops::{Add, Index, IndexMut, Mul, Sub};

use num_complex::Complex64;

use crate::error::{Error, Result};

pub type Cplx = Complex64;

pub const ZERO: Cplx = Cplx::new(0.0, 0.0);
pub const ONE: Cplx = Cplx::new(1.0, 0.0);
pub const I: Cplx = Cplx::new(0.0, 1.0);

#[inline]
pub fn re(x: f64) -> Cplx {
    Cplx::new(x, 0.0)
}

#[derive(Clone, Debug, PartialEq)]
pub struct CMat {
    rows: usize,
    cols: usize,
    data: Vec<Cplx>,
}

impl CMat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        CMat { rows, cols, data: vec![ZERO; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = ONE;
        }
        m
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<Cplx>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch(format!(
                "{} entries for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        Ok(CMat { rows, cols, data })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Cplx) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        CMat { rows, cols, data }
    }

    /// Square matrix from nested rows; panics on ragged input.
    pub fn from_rows<const N: usize>(rows: [[Cplx; N]; N]) -> Self {
        Self::from_fn(N, N, |i, j| rows[i][j])
    }

    pub fn from_diag(d: &[Cplx]) -> Self {
        let mut m = Self::zeros(d.len(), d.len());
        for (i, &x) in d.iter().enumerate() {
            m[(i, i)] = x;
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn as_slice(&self) -> &[Cplx] {
        &self.data
    }

    pub fn scale(&self, s: Cplx) -> Self {
        CMat { rows: self.rows, cols: self.cols, data: self.data.iter().map(|&x| x * s).collect() }
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn trace(&self) -> Cplx {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    pub fn norm(&self) -> f64 {
        self.data.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|x| x.norm()).fold(0.0, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }

    pub fn matvec(&self, v: &[Cplx]) -> Vec<Cplx> {
        assert_eq!(self.cols, v.len(), "matvec dimension mismatch");
        (0..self.rows)
            .map(|i| {
                let row = &self.data[i * self.cols..(i + 1) * self.cols];
                row.iter().zip(v).map(|(a, b)| a * b).sum()
            })
            .collect()
    }

    /// Row vector times matrix.
    pub fn vecmat(&self, v: &[Cplx]) -> Vec<Cplx> {
        assert_eq!(self.rows, v.len(), "vecmat dimension mismatch");
        let mut out = vec![ZERO; self.cols];
        for (i, &vi) in v.iter().enumerate() {
            if vi == ZERO {
                continue;
            }
            for (o, &a) in out.iter_mut().zip(&self.data[i * self.cols..(i + 1) * self.cols]) {
                *o += vi * a;
            }
        }
        out
    }

    pub fn commutator(&self, other: &CMat) -> CMat {
        &(self * other) - &(other * self)
    }

    /// Sub-block `(bi, bj)` when the matrix is viewed as a `k x k` grid of
    /// equally sized blocks (the first tensor factor has dimension `k`).
    pub fn block(&self, k: usize, bi: usize, bj: usize) -> CMat {
        let n = self.rows / k;
        let m = self.cols / k;
        Self::from_fn(n, m, |i, j| self[(bi * n + i, bj * m + j)])
    }

    /// Inverse of [`CMat::block`]: builds the matrix from a `k x k` block grid.
    pub fn from_blocks(grid: &[Vec<CMat>]) -> CMat {
        let k = grid.len();
        let n = grid[0][0].rows;
        let m = grid[0][0].cols;
        Self::from_fn(k * n, k * m, |i, j| grid[i / n][j / m][(i % n, j % m)])
    }

    /// Partial trace over the leading tensor factor of dimension `k`.
    pub fn trace_first(&self, k: usize) -> CMat {
        let n = self.rows / k;
        let m = self.cols / k;
        Self::from_fn(n, m, |i, j| (0..k).map(|a| self[(a * n + i, a * m + j)]).sum())
    }
}

impl Index<(usize, usize)> for CMat {
    type Output = Cplx;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &Cplx {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for CMat {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Cplx {
        &mut self.data[i * self.cols + j]
    }
}

impl Mul for &CMat {
    type Output = CMat;
    fn mul(self, rhs: &CMat) -> CMat {
        assert_eq!(self.cols, rhs.rows, "matmul dimension mismatch");
        let mut out = CMat::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            let orow = &mut out.data[i * rhs.cols..(i + 1) * rhs.cols];
            for k in 0..self.cols {
                let a = self.data[i * self.cols + k];
                if a == ZERO {
                    continue;
                }
                let brow = &rhs.data[k * rhs.cols..(k + 1) * rhs.cols];
                for (o, &b) in orow.iter_mut().zip(brow) {
                    *o += a * b;
                }
            }
        }
        out
    }
}

impl Add for &CMat {
    type Output = CMat;
    fn add(self, rhs: &CMat) -> CMat {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols), "add dimension mismatch");
        CMat {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect(),
        }
    }
}

impl Sub for &CMat {
    type Output = CMat;
    fn sub(self, rhs: &CMat) -> CMat {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols), "sub dimension mismatch");
        CMat {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect(),
        }
    }
}

/// `‖a − b‖ / ‖a‖` in the Frobenius norm; absolute when `a` vanishes.
pub fn rel_diff(a: &CMat, b: &CMat) -> f64 {
    let d = (a - b).norm();
    let n = a.norm();
    if n > 0.0 {
        d / n
    } else {
        d
    }
}

pub fn vnorm(v: &[Cplx]) -> f64 {
    v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

/// Hermitian inner product, conjugate-linear in `a`.
pub fn vdot(a: &[Cplx], b: &[Cplx]) -> Cplx {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

/// Bilinear contraction (no conjugation), used for covector-vector pairings.
pub fn pair(a: &[Cplx], b: &[Cplx]) -> Cplx {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn vsub(a: &[Cplx], b: &[Cplx]) -> Vec<Cplx> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub fn vscale(a: &[Cplx], s: Cplx) -> Vec<Cplx> {
    a.iter().map(|x| x * s).collect()
}

/// Distance of `reference` from the line spanned by `candidate`, relative
/// to `‖reference‖`: `min_s ‖reference − s·candidate‖ / ‖reference‖`.
pub fn collinearity_defect(reference: &[Cplx], candidate: &[Cplx]) -> f64 {
    let nr = vnorm(reference);
    let cc = vdot(candidate, candidate);
    if nr == 0.0 || cc.re == 0.0 {
        return f64::INFINITY;
    }
    let s = vdot(candidate, reference) / cc;
    let d: f64 = reference
        .iter()
        .zip(candidate)
        .map(|(r, c)| (r - s * c).norm_sqr())
        .sum::<f64>()
        .sqrt();
    d / nr
}

/// Ordered list of local tensor-factor dimensions.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SpaceShape {
    factors: Vec<usize>,
}

impl SpaceShape {
    pub fn new(factors: Vec<usize>) -> Result<Self> {
        if factors.iter().any(|&d| d == 0) {
            return Err(Error::DimensionMismatch("zero local dimension".into()));
        }
        Ok(SpaceShape { factors })
    }

    /// `n` copies of a `d`-dimensional factor.
    pub fn uniform(d: usize, n: usize) -> Self {
        SpaceShape { factors: vec![d; n] }
    }

    pub fn factors(&self) -> &[usize] {
        &self.factors
    }

    pub fn dim(&self) -> usize {
        self.factors.iter().product()
    }

    fn strides(&self) -> Vec<usize> {
        let mut s = vec![1; self.factors.len()];
        for k in (0..self.factors.len().saturating_sub(1)).rev() {
            s[k] = s[k + 1] * self.factors[k + 1];
        }
        s
    }
}

pub fn kron(a: &CMat, b: &CMat) -> CMat {
    CMat::from_fn(a.rows * b.rows, a.cols * b.cols, |r, c| {
        a[(r / b.rows, c / b.cols)] * b[(r % b.rows, c % b.cols)]
    })
}

pub fn kron_all(mats: &[CMat]) -> CMat {
    mats.iter().fold(CMat::identity(1), |acc, m| kron(&acc, m))
}

pub fn kron_vec(a: &[Cplx], b: &[Cplx]) -> Vec<Cplx> {
    a.iter().flat_map(|x| b.iter().map(move |y| x * y)).collect()
}

/// Embeds `op`, acting on factors `(i, j)` in that order, into the full space.
pub fn embed_pair(op: &CMat, i: usize, j: usize, shape: &SpaceShape) -> Result<CMat> {
    let f = shape.factors();
    if i == j {
        return Err(Error::SameSite(i));
    }
    if i >= f.len() || j >= f.len() {
        return Err(Error::DimensionMismatch(format!(
            "site pair ({i},{j}) outside a {}-factor space",
            f.len()
        )));
    }
    let (di, dj) = (f[i], f[j]);
    if op.rows != di * dj || op.cols != di * dj {
        return Err(Error::DimensionMismatch(format!(
            "operator {}x{} on factors of dimension {di}x{dj}",
            op.rows, op.cols
        )));
    }
    let st = shape.strides();
    let dim = shape.dim();
    let mut out = CMat::zeros(dim, dim);
    for col in 0..dim {
        let ci = (col / st[i]) % di;
        let cj = (col / st[j]) % dj;
        let base = col - ci * st[i] - cj * st[j];
        let oc = ci * dj + cj;
        for a in 0..di {
            for b in 0..dj {
                let v = op[(a * dj + b, oc)];
                if v != ZERO {
                    out[(base + a * st[i] + b * st[j], col)] = v;
                }
            }
        }
    }
    Ok(out)
}

/// Swap operator on `C^d ⊗ C^d`.
pub fn permutation_op(d: usize) -> CMat {
    let mut p = CMat::zeros(d * d, d * d);
    for i in 0..d {
        for j in 0..d {
            p[(j * d + i, i * d + j)] = ONE;
        }
    }
    p
}

/// LU factorization with partial pivoting.
pub struct Lu {
    lu: CMat,
    perm: Vec<usize>,
}

impl Lu {
    pub fn new(a: &CMat) -> Result<Self> {
        if !a.is_square() {
            return Err(Error::DimensionMismatch("LU of a non-square matrix".into()));
        }
        let n = a.rows;
        let mut lu = a.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut pmax: f64 = 0.0;
        let mut pmin = f64::INFINITY;
        for k in 0..n {
            let p = (k..n)
                .max_by(|&x, &y| lu[(x, k)].norm().total_cmp(&lu[(y, k)].norm()))
                .unwrap();
            if p != k {
                for j in 0..n {
                    lu.data.swap(k * n + j, p * n + j);
                }
                perm.swap(k, p);
            }
            let piv = lu[(k, k)];
            pmax = pmax.max(piv.norm());
            pmin = pmin.min(piv.norm());
            if piv == ZERO || !piv.is_finite() {
                return Err(Error::Singular { condition: f64::INFINITY });
            }
            for i in k + 1..n {
                let f = lu[(i, k)] / piv;
                lu[(i, k)] = f;
                if f != ZERO {
                    for j in k + 1..n {
                        let t = lu[(k, j)];
                        lu[(i, j)] -= f * t;
                    }
                }
            }
        }
        if n > 0 && pmin <= (n as f64) * f64::EPSILON * pmax {
            return Err(Error::Singular { condition: pmax / pmin });
        }
        Ok(Lu { lu, perm })
    }

    pub fn solve(&self, b: &[Cplx]) -> Vec<Cplx> {
        let n = self.lu.rows;
        let mut x: Vec<Cplx> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            let mut s = x[i];
            for j in 0..i {
                s -= self.lu[(i, j)] * x[j];
            }
            x[i] = s;
        }
        for i in (0..n).rev() {
            let mut s = x[i];
            for j in i + 1..n {
                s -= self.lu[(i, j)] * x[j];
            }
            x[i] = s / self.lu[(i, i)];
        }
        x
    }

    pub fn inverse(&self) -> CMat {
        let n = self.lu.rows;
        let mut inv = CMat::zeros(n, n);
        let mut e = vec![ZERO; n];
        for j in 0..n {
            e.iter_mut().for_each(|x| *x = ZERO);
            e[j] = ONE;
            for (i, v) in self.solve(&e).into_iter().enumerate() {
                inv[(i, j)] = v;
            }
        }
        inv
    }
}

pub fn solve_linear(a: &CMat, b: &[Cplx]) -> Result<Vec<Cplx>> {
    if a.rows != b.len() {
        return Err(Error::DimensionMismatch("right-hand side length".into()));
    }
    Ok(Lu::new(a)?.solve(b))
}

pub fn inverse(a: &CMat) -> Result<CMat> {
    Ok(Lu::new(a)?.inverse())
}

#[derive(Clone, Debug)]
pub struct EigenPair {
    pub value: Cplx,
    pub vector: Vec<Cplx>,
}

pub const EIG_MAX_DIM: usize = 1000;

/// Rotation `G = [[c, s], [-conj(s), c]]` with `G·(x, y) = (r, 0)`.
fn givens(x: Cplx, y: Cplx) -> (f64, Cplx) {
    let ax = x.norm();
    let ay = y.norm();
    if ay == 0.0 {
        return (1.0, ZERO);
    }
    if ax == 0.0 {
        return (0.0, y.conj() / ay);
    }
    let r = ax.hypot(ay);
    (ax / r, (x / ax) * y.conj() / r)
}

fn rot_rows(h: &mut CMat, k: usize, c: f64, s: Cplx, cols: std::ops::Range<usize>) {
    for j in cols {
        let a = h[(k, j)];
        let b = h[(k + 1, j)];
        h[(k, j)] = a * c + s * b;
        h[(k + 1, j)] = -s.conj() * a + b * c;
    }
}

fn rot_cols(h: &mut CMat, k: usize, c: f64, s: Cplx, rows: std::ops::Range<usize>) {
    for i in rows {
        let a = h[(i, k)];
        let b = h[(i, k + 1)];
        h[(i, k)] = a * c + b * s.conj();
        h[(i, k + 1)] = -a * s + b * c;
    }
}

/// Unitary reduction to upper Hessenberg form, returning `(H, Q)` with `a = Q H Q^H`.
fn hessenberg(a: &CMat) -> (CMat, CMat) {
    let n = a.rows;
    let mut h = a.clone();
    let mut q = CMat::identity(n);
    for k in 0..n.saturating_sub(2) {
        let x: Vec<Cplx> = (k + 1..n).map(|i| h[(i, k)]).collect();
        let xn = vnorm(&x);
        if xn == 0.0 {
            continue;
        }
        let phase = if x[0].norm() > 0.0 { x[0] / x[0].norm() } else { ONE };
        let mut v = x.clone();
        v[0] += phase * xn;
        let vn = vnorm(&v);
        if vn == 0.0 {
            continue;
        }
        v.iter_mut().for_each(|z| *z /= vn);
        // h <- (I - 2vv^H) h
        for j in 0..n {
            let s: Cplx = (0..v.len()).map(|t| v[t].conj() * h[(k + 1 + t, j)]).sum();
            for t in 0..v.len() {
                h[(k + 1 + t, j)] -= 2.0 * v[t] * s;
            }
        }
        // h <- h (I - 2vv^H), q <- q (I - 2vv^H)
        for m in [&mut h, &mut q] {
            for i in 0..n {
                let s: Cplx = (0..v.len()).map(|t| m[(i, k + 1 + t)] * v[t]).sum();
                for t in 0..v.len() {
                    m[(i, k + 1 + t)] -= 2.0 * s * v[t].conj();
                }
            }
        }
        for i in k + 2..n {
            h[(i, k)] = ZERO;
        }
    }
    (h, q)
}

/// Complex Schur form `a = Z T Z^H` by shifted QR on the Hessenberg form.
fn schur(a: &CMat) -> Result<(CMat, CMat)> {
    let n = a.rows;
    let (mut h, mut z) = hessenberg(a);
    if n < 2 {
        return Ok((h, z));
    }
    let scale = a.max_abs().max(f64::MIN_POSITIVE);
    let budget = 60 * n;
    let mut hi = n - 1;
    let mut iter = 0usize;
    let mut total = 0usize;
    while hi > 0 {
        let mut l = hi;
        while l > 0 {
            let s = h[(l - 1, l - 1)].norm() + h[(l, l)].norm();
            let s = if s == 0.0 { scale } else { s };
            if h[(l, l - 1)].norm() <= f64::EPSILON * s {
                h[(l, l - 1)] = ZERO;
                break;
            }
            l -= 1;
        }
        if l == hi {
            hi -= 1;
            iter = 0;
            continue;
        }
        iter += 1;
        total += 1;
        if total > budget {
            return Err(Error::NoConvergence(format!(
                "QR iteration exceeded {budget} sweeps (dimension {n})"
            )));
        }
        let shift = if iter % 11 == 10 {
            h[(hi, hi)] + h[(hi, hi - 1)].norm() * 0.75
        } else {
            let a11 = h[(hi - 1, hi - 1)];
            let a12 = h[(hi - 1, hi)];
            let a21 = h[(hi, hi - 1)];
            let a22 = h[(hi, hi)];
            let half = (a11 - a22) * 0.5;
            let disc = (half * half + a12 * a21).sqrt();
            let m1 = (a11 + a22) * 0.5 + disc;
            let m2 = (a11 + a22) * 0.5 - disc;
            if (m1 - a22).norm() < (m2 - a22).norm() {
                m1
            } else {
                m2
            }
        };
        let mut x = h[(l, l)] - shift;
        let mut y = h[(l + 1, l)];
        for k in l..hi {
            let (c, s) = givens(x, y);
            let c0 = if k > l { k - 1 } else { l };
            rot_rows(&mut h, k, c, s, c0..n);
            let r1 = (k + 3).min(hi + 1);
            rot_cols(&mut h, k, c, s, 0..r1);
            rot_cols(&mut z, k, c, s, 0..n);
            if k > l {
                h[(k + 1, k - 1)] = ZERO;
            }
            if k + 1 < hi {
                x = h[(k + 1, k)];
                y = h[(k + 2, k)];
            }
        }
    }
    Ok((h, z))
}

/// Eigenpairs of a general complex matrix, sorted by `(Re, Im)` of the
/// eigenvalue. Eigenvectors have unit norm with the largest component real
/// and positive.
pub fn eig_general(a: &CMat) -> Result<Vec<EigenPair>> {
    if !a.is_square() {
        return Err(Error::DimensionMismatch("eigenproblem of a non-square matrix".into()));
    }
    let n = a.rows;
    if n > EIG_MAX_DIM {
        return Err(Error::DimensionMismatch(format!("dimension {n} above {EIG_MAX_DIM}")));
    }
    if !a.is_finite() {
        return Err(Error::NonFinite("eigenproblem input".into()));
    }
    let (t, z) = schur(a)?;
    let smin = (f64::EPSILON * t.max_abs()).max(f64::MIN_POSITIVE);
    let mut pairs = Vec::with_capacity(n);
    for k in 0..n {
        let lam = t[(k, k)];
        let mut v = vec![ZERO; n];
        v[k] = ONE;
        for i in (0..k).rev() {
            let s: Cplx = (i + 1..=k).map(|j| t[(i, j)] * v[j]).sum();
            let mut den = t[(i, i)] - lam;
            if den.norm() < smin {
                den = Cplx::new(smin, 0.0);
            }
            v[i] = -s / den;
        }
        let mut x = z.matvec(&v);
        normalize_phase(&mut x);
        pairs.push(EigenPair { value: lam, vector: x });
    }
    pairs.sort_by(|p, q| {
        p.value.re.total_cmp(&q.value.re).then(p.value.im.total_cmp(&q.value.im))
    });
    Ok(pairs)
}

/// Scales to unit norm with the largest-modulus component real positive.
pub fn normalize_phase(x: &mut [Cplx]) {
    let n = vnorm(x);
    if n == 0.0 {
        return;
    }
    let big = x
        .iter()
        .copied()
        .max_by(|a, b| a.norm().total_cmp(&b.norm()))
        .unwrap_or(ONE);
    let f = big.conj() / (big.norm() * n);
    x.iter_mut().for_each(|z| *z *= f);
}

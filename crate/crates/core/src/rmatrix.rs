//! Trigonometric R-matrices and their defining identities.
//!
//! The SU(3) matrix acts on `C^3 ⊗ C^3` with basis index `3i + j`. Off the
//! diagonal the weights are `a(u) = sinh(u+η)` on `|ii⟩`, `b(u) = sinh u` on
//! `|ij⟩`, and the exchange `|ij⟩ ← |ji⟩` carries `c(u) = e^u sinh η` for
//! `i < j` and `d(u) = e^{-u} sinh η` for `i > j`.

use crate::linalg::{embed_pair, kron, permutation_op, rel_diff, CMat, Cplx, SpaceShape, ONE, ZERO};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WeightSet {
    pub eta: Cplx,
    pub u: Cplx,
}

impl WeightSet {
    pub fn new(u: Cplx, eta: Cplx) -> Self {
        WeightSet { eta, u }
    }
    pub fn a(&self) -> Cplx {
        (self.u + self.eta).sinh()
    }
    pub fn b(&self) -> Cplx {
        self.u.sinh()
    }
    pub fn c(&self) -> Cplx {
        self.u.exp() * self.eta.sinh()
    }
    pub fn d(&self) -> Cplx {
        (-self.u).exp() * self.eta.sinh()
    }
    /// `(a', b', c', d')` with respect to `u`.
    pub fn derivatives(&self) -> [Cplx; 4] {
        [(self.u + self.eta).cosh(), self.u.cosh(), self.c(), -self.d()]
    }
}

fn r9_from([a, b, c, d]: [Cplx; 4]) -> CMat {
    let mut r = CMat::zeros(9, 9);
    for i in 0..3 {
        for j in 0..3 {
            if i == j {
                r[(4 * i, 4 * i)] = a;
            } else {
                r[(3 * i + j, 3 * i + j)] = b;
                r[(3 * i + j, 3 * j + i)] = if i < j { c } else { d };
            }
        }
    }
    r
}

pub fn r9(u: Cplx, eta: Cplx) -> CMat {
    let w = WeightSet::new(u, eta);
    r9_from([w.a(), w.b(), w.c(), w.d()])
}

/// `d/du r9(u, η)`.
pub fn r9_deriv(u: Cplx, eta: Cplx) -> CMat {
    r9_from(WeightSet::new(u, eta).derivatives())
}

/// Nested six-vertex matrix with asymmetric exchange weights.
pub fn r4(u: Cplx, eta: Cplx) -> CMat {
    let w = WeightSet::new(u, eta);
    let (a, b) = (w.a(), w.b());
    CMat::from_rows([
        [a, ZERO, ZERO, ZERO],
        [ZERO, b, w.c(), ZERO],
        [ZERO, w.d(), b, ZERO],
        [ZERO, ZERO, ZERO, a],
    ])
}

/// Symmetric six-vertex matrix of the gauge frame.
pub fn r4_sym(lambda: Cplx, eta: Cplx) -> CMat {
    let a = (lambda + eta).sinh();
    let b = lambda.sinh();
    let s = eta.sinh();
    CMat::from_rows([
        [a, ZERO, ZERO, ZERO],
        [ZERO, b, s, ZERO],
        [ZERO, s, b, ZERO],
        [ZERO, ZERO, ZERO, a],
    ])
}

pub fn crossing_m(eta: Cplx) -> CMat {
    CMat::from_diag(&[(4.0 * eta).exp(), (2.0 * eta).exp(), ONE])
}

/// `σ(λ) = diag(e^{λ/2}, e^{-λ/2})`.
pub fn sigma(lambda: Cplx) -> CMat {
    CMat::from_diag(&[(lambda / 2.0).exp(), (-lambda / 2.0).exp()])
}

/// `P R P`, the matrix with its two factors exchanged.
pub fn swap_factors(r: &CMat, d: usize) -> CMat {
    let p = permutation_op(d);
    &(&p * r) * &p
}

/// Transpose in the first tensor factor of a `d² x d²` matrix.
pub fn partial_transpose_first(r: &CMat, d: usize) -> CMat {
    CMat::from_fn(d * d, d * d, |row, col| {
        let (i, j) = (row / d, row % d);
        let (k, l) = (col / d, col % d);
        r[(k * d + j, i * d + l)]
    })
}

pub fn rho1(u: Cplx, eta: Cplx) -> Cplx {
    -(u - eta).sinh() * (u + eta).sinh()
}

pub fn rho2(u: Cplx, eta: Cplx) -> Cplx {
    -u.sinh() * (u + 3.0 * eta).sinh()
}

fn ybe_residual(r: impl Fn(Cplx) -> CMat, d: usize, u1: Cplx, u2: Cplx, u3: Cplx) -> f64 {
    let shape = SpaceShape::uniform(d, 3);
    let e = |m: &CMat, i, j| embed_pair(m, i, j, &shape).expect("fixed three-site shape");
    let r12 = e(&r(u1 - u2), 0, 1);
    let r13 = e(&r(u1 - u3), 0, 2);
    let r23 = e(&r(u2 - u3), 1, 2);
    let lhs = &(&r12 * &r13) * &r23;
    let rhs = &(&r23 * &r13) * &r12;
    rel_diff(&lhs, &rhs)
}

/// Relative residual of `R12 R13 R23 = R23 R13 R12` for the SU(3) matrix.
pub fn check_ybe(u1: Cplx, u2: Cplx, u3: Cplx, eta: Cplx) -> f64 {
    ybe_residual(|u| r9(u, eta), 3, u1, u2, u3)
}

pub fn check_ybe_r4(u1: Cplx, u2: Cplx, u3: Cplx, eta: Cplx) -> f64 {
    ybe_residual(|u| r4(u, eta), 2, u1, u2, u3)
}

/// Relative deviation of `R12(u) R21(-u)` from `ρ1(u)·Id`.
pub fn check_unitarity(u: Cplx, eta: Cplx) -> f64 {
    let lhs = &r9(u, eta) * &swap_factors(&r9(-u, eta), 3);
    rel_diff(&CMat::identity(9).scale(rho1(u, eta)), &lhs)
}

/// Relative deviation of `R12^{t1}(u) M1 R21^{t1}(-u-3η) M1^{-1}` from `ρ2(u)·Id`.
pub fn check_crossing_unitarity(u: Cplx, eta: Cplx) -> f64 {
    let m = crossing_m(eta);
    let minv = CMat::from_diag(&[(-4.0 * eta).exp(), (-2.0 * eta).exp(), ONE]);
    let m1 = kron(&m, &CMat::identity(3));
    let m1inv = kron(&minv, &CMat::identity(3));
    let a = partial_transpose_first(&r9(u, eta), 3);
    let b = partial_transpose_first(&swap_factors(&r9(-u - 3.0 * eta, eta), 3), 3);
    let lhs = &(&(&a * &m1) * &b) * &m1inv;
    rel_diff(&CMat::identity(9).scale(rho2(u, eta)), &lhs)
}

/// `P R(u) P` against the full transpose of `R(u)`.
pub fn check_pt_symmetry(u: Cplx, eta: Cplx) -> f64 {
    let r = r9(u, eta);
    rel_diff(&r.transpose(), &swap_factors(&r, 3))
}

/// `R(u + iπ)` against `-R(u)`.
pub fn check_periodicity(u: Cplx, eta: Cplx) -> f64 {
    let r = r9(u, eta);
    let shifted = r9(u + Cplx::new(0.0, std::f64::consts::PI), eta);
    rel_diff(&r.scale(-ONE), &shifted)
}

/// Gauge link between the symmetric and asymmetric six-vertex matrices:
/// `(σ(λ1)⊗σ(λ2)) R̃(λ1−λ2) (σ(λ1)⊗σ(λ2))^{-1} = r(λ1−λ2)`.
pub fn sigma_link_residual(l1: Cplx, l2: Cplx, eta: Cplx) -> f64 {
    let s = kron(&sigma(l1), &sigma(l2));
    let sinv = kron(&sigma(-l1), &sigma(-l2));
    let lhs = &(&s * &r4_sym(l1 - l2, eta)) * &sinv;
    rel_diff(&r4(l1 - l2, eta), &lhs)
}

//! Monodromy, double-row monodromy and transfer matrices of the open chain,
//! the Hamiltonian, and its exact diagonalization.
//!
//! With the auxiliary space explicit the shape is `[3, 3, …, 3]` with the
//! auxiliary factor first; sites `1..=N` follow with site 1 slowest.

use crate::boundary::{k_minus, k_minus_deriv, k_plus, k_plus_deriv, ModelParams};
use crate::error::{Error, Result};
use crate::linalg::{eig_general, embed_pair, inverse, kron, re, rel_diff, CMat, Cplx, SpaceShape};
use crate::rmatrix::{r9, r9_deriv};

#[derive(Clone, Debug)]
pub struct ChainOperator {
    pub matrix: CMat,
    pub shape: SpaceShape,
    pub label: String,
}

impl ChainOperator {
    fn new(matrix: CMat, shape: SpaceShape, label: impl Into<String>) -> Self {
        debug_assert_eq!(matrix.rows(), shape.dim());
        ChainOperator { matrix, shape, label: label.into() }
    }
}

fn aux_shape(n: usize) -> SpaceShape {
    SpaceShape::uniform(3, n + 1)
}

/// Factor of the double-row product, kept symbolic so it can be evaluated
/// or differentiated.
#[derive(Clone, Copy)]
enum Factor {
    KPlus,
    KMinus,
    /// `R_{0j}(u − θ_j)`
    Row(usize),
    /// `R_{j0}(u + θ_j)`
    RowHat(usize),
}

fn eval_factor(f: Factor, u: Cplx, params: &ModelParams, shape: &SpaceShape, deriv: bool) -> CMat {
    let n = params.n_sites();
    let rest = CMat::identity(3usize.pow(n as u32));
    let eta = params.eta;
    let r = |x| if deriv { r9_deriv(x, eta) } else { r9(x, eta) };
    match f {
        Factor::KPlus => kron(&if deriv { k_plus_deriv(u, params) } else { k_plus(u, params) }, &rest),
        Factor::KMinus => kron(&if deriv { k_minus_deriv(u, params) } else { k_minus(u, params) }, &rest),
        Factor::Row(j) => embed_pair(&r(u - params.theta[j - 1]), 0, j, shape).expect("valid site"),
        Factor::RowHat(j) => embed_pair(&r(u + params.theta[j - 1]), j, 0, shape).expect("valid site"),
    }
}

fn row_factors(n: usize) -> impl Iterator<Item = Factor> {
    (1..=n).rev().map(Factor::Row)
}

fn hat_factors(n: usize) -> impl Iterator<Item = Factor> {
    (1..=n).map(Factor::RowHat)
}

fn product(factors: &[Factor], u: Cplx, params: &ModelParams, shape: &SpaceShape) -> CMat {
    factors
        .iter()
        .fold(CMat::identity(shape.dim()), |acc, &f| &acc * &eval_factor(f, u, params, shape, false))
}

/// `T_0(u) = R_{0N}(u−θ_N) ⋯ R_{01}(u−θ_1)`.
pub fn monodromy(u: Cplx, params: &ModelParams) -> ChainOperator {
    let n = params.n_sites();
    let shape = aux_shape(n);
    let f: Vec<Factor> = row_factors(n).collect();
    ChainOperator::new(product(&f, u, params, &shape), shape, "monodromy")
}

/// `T̂_0(u) = R_{10}(u+θ_1) ⋯ R_{N0}(u+θ_N)`.
pub fn monodromy_hat(u: Cplx, params: &ModelParams) -> ChainOperator {
    let n = params.n_sites();
    let shape = aux_shape(n);
    let f: Vec<Factor> = hat_factors(n).collect();
    ChainOperator::new(product(&f, u, params, &shape), shape, "monodromy_hat")
}

/// `𝕋_0(u) = T_0(u) K⁻_0(u) T̂_0(u)`.
pub fn double_row(u: Cplx, params: &ModelParams) -> ChainOperator {
    let n = params.n_sites();
    let shape = aux_shape(n);
    let f: Vec<Factor> =
        row_factors(n).chain(std::iter::once(Factor::KMinus)).chain(hat_factors(n)).collect();
    ChainOperator::new(product(&f, u, params, &shape), shape, "double_row")
}

fn transfer_factors(n: usize) -> Vec<Factor> {
    std::iter::once(Factor::KPlus)
        .chain(row_factors(n))
        .chain(std::iter::once(Factor::KMinus))
        .chain(hat_factors(n))
        .collect()
}

/// `t(u) = tr_0[K⁺_0(u) 𝕋_0(u)]`.
pub fn transfer(u: Cplx, params: &ModelParams) -> ChainOperator {
    let n = params.n_sites();
    let shape = aux_shape(n);
    let full = product(&transfer_factors(n), u, params, &shape);
    ChainOperator::new(full.trace_first(3), SpaceShape::uniform(3, n), "transfer")
}

/// `t'(u)` by the product rule over every factor of the double-row product.
pub fn transfer_derivative(u: Cplx, params: &ModelParams) -> ChainOperator {
    let n = params.n_sites();
    let shape = aux_shape(n);
    let fs = transfer_factors(n);
    let vals: Vec<CMat> = fs.iter().map(|&f| eval_factor(f, u, params, &shape, false)).collect();
    let mut suffix = vec![CMat::identity(shape.dim()); fs.len() + 1];
    for k in (0..fs.len()).rev() {
        suffix[k] = &vals[k] * &suffix[k + 1];
    }
    let mut prefix = CMat::identity(shape.dim());
    let mut total = CMat::zeros(shape.dim(), shape.dim());
    for (k, &f) in fs.iter().enumerate() {
        let d = eval_factor(f, u, params, &shape, true);
        total = &total + &(&(&prefix * &d) * &suffix[k + 1]);
        prefix = &prefix * &vals[k];
    }
    ChainOperator::new(total.trace_first(3), SpaceShape::uniform(3, n), "transfer_derivative")
}

/// Richardson-extrapolated central difference of `t` at `u`.
pub fn transfer_derivative_fd(u: Cplx, params: &ModelParams, h1: f64, h2: f64) -> CMat {
    let d = |h: f64| (&transfer(u + h, params).matrix - &transfer(u - h, params).matrix).scale(re(0.5 / h));
    let (d1, d2) = (d(h1), d(h2));
    let r = (h1 / h2).powi(2);
    (&d2.scale(re(r)) - &d1).scale(re(1.0 / (r - 1.0)))
}

pub const HAMILTONIAN_FD_TOL: f64 = 1e-8;

#[derive(Clone, Debug)]
pub struct Hamiltonian {
    pub op: ChainOperator,
    /// Relative mismatch between the analytic and extrapolated `t'(0)`.
    pub fd_discrepancy: f64,
}

/// `H = sinh η · t'(0) t(0)^{-1}` on the homogeneous chain.
pub fn hamiltonian(params: &ModelParams) -> Result<Hamiltonian> {
    if !params.is_homogeneous() {
        return Err(Error::Inhomogeneous);
    }
    let z = Cplx::new(0.0, 0.0);
    let t0 = transfer(z, params).matrix;
    let dt = transfer_derivative(z, params).matrix;
    let fd = transfer_derivative_fd(z, params, 1e-4, 5e-5);
    let disc = rel_diff(&dt, &fd);
    if !(disc <= HAMILTONIAN_FD_TOL) {
        return Err(Error::NoConvergence(format!(
            "analytic and finite-difference t'(0) disagree ({disc:.3e})"
        )));
    }
    let h = (&dt * &inverse(&t0)?).scale(params.eta.sinh());
    let n = params.n_sites();
    Ok(Hamiltonian { op: ChainOperator::new(h, SpaceShape::uniform(3, n), "hamiltonian"), fd_discrepancy: disc })
}

#[derive(Clone, Debug)]
pub struct EdLevel {
    pub energy: Cplx,
    pub vector: Vec<Cplx>,
}

/// All eigenpairs of `H`, sorted by `(Re, Im)` of the energy.
pub fn spectrum(params: &ModelParams) -> Result<Vec<EdLevel>> {
    let h = hamiltonian(params)?;
    Ok(eig_general(&h.op.matrix)?
        .into_iter()
        .map(|p| EdLevel { energy: p.value, vector: p.vector })
        .collect())
}

/// Eigenvalues of `t(u)`.
pub fn transfer_spectrum(u: Cplx, params: &ModelParams) -> Result<Vec<Cplx>> {
    Ok(eig_general(&transfer(u, params).matrix)?.into_iter().map(|p| p.value).collect())
}

/// Scalar `s` with `t(0) ≈ s·Id` and the relative deviation `‖t(0) − s Id‖/|s|`.
pub fn identity_at_origin(params: &ModelParams) -> (Cplx, f64) {
    let t0 = transfer(Cplx::new(0.0, 0.0), params).matrix;
    let d = t0.rows();
    let s = t0.trace() / d as f64;
    let dev = (&t0 - &CMat::identity(d).scale(s)).norm() / s.norm();
    (s, dev)
}

/// `‖[t(u), t(v)]‖ / (‖t(u)‖ ‖t(v)‖)`.
pub fn commutator_residual(u: Cplx, v: Cplx, params: &ModelParams) -> f64 {
    let tu = transfer(u, params).matrix;
    let tv = transfer(v, params).matrix;
    tu.commutator(&tv).norm() / (tu.norm() * tv.norm())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::boundary::k_minus;
    use crate::linalg::{permutation_op, ZERO};
    use crate::tables::table_params;

    fn c(a: f64, b: f64) -> Cplx {
        Cplx::new(a, b)
    }

    fn inhom(n: usize) -> ModelParams {
        table_params(n).with_theta((1..=n).map(|j| re(0.01 * j as f64)).collect())
    }

    #[test]
    fn one_site_monodromies_at_coincidence() {
        let p = inhom(1);
        let eta = p.eta;
        let t = monodromy(p.theta[0], &p);
        assert!(rel_diff(&permutation_op(3).scale(eta.sinh()), &t.matrix) < 1e-15);
        let th = monodromy_hat(-p.theta[0], &p);
        assert!(rel_diff(&permutation_op(3).scale(eta.sinh()), &th.matrix) < 1e-15);
    }

    #[test]
    fn two_site_monodromy_brute_force() {
        let p = inhom(2);
        let u = c(0.3, -0.1);
        let eta = p.eta;
        // R_{01} on [aux, s1, s2] is r9 ⊗ Id; R_{02} acts on factors (0, 2).
        let r01 = kron(&r9(u - p.theta[0], eta), &CMat::identity(3));
        let r = r9(u - p.theta[1], eta);
        let r02 = CMat::from_fn(27, 27, |row, col| {
            let (a, b, s) = (row / 9, (row / 3) % 3, row % 3);
            let (a2, b2, s2) = (col / 9, (col / 3) % 3, col % 3);
            if b != b2 {
                return ZERO;
            }
            r[(a * 3 + s, a2 * 3 + s2)]
        });
        let expect = &r02 * &r01;
        assert!(rel_diff(&expect, &monodromy(u, &p).matrix) < 1e-15);
    }

    #[test]
    fn rll_relation() {
        let p = inhom(2);
        let (u, v) = (c(0.31, 0.12), c(-0.17, 0.26));
        let eta = p.eta;
        let d = 27;
        let rest = CMat::identity(9);
        // two auxiliary spaces in front of the chain: [a, b, s1, s2]
        let ta = monodromy(u, &p).matrix;
        let tb = monodromy(v, &p).matrix;
        let embed_aux = |m: &CMat, first: bool| {
            let mut out = CMat::zeros(3 * d, 3 * d);
            for i in 0..3 * d {
                for j in 0..3 * d {
                    let (a, b, s) = (i / d, (i / 9) % 3, i % 9);
                    let (a2, b2, s2) = (j / d, (j / 9) % 3, j % 9);
                    out[(i, j)] = if first {
                        if b == b2 { m[(a * 9 + s, a2 * 9 + s2)] } else { ZERO }
                    } else if a == a2 {
                        m[(b * 9 + s, b2 * 9 + s2)]
                    } else {
                        ZERO
                    };
                }
            }
            out
        };
        let t1 = embed_aux(&ta, true);
        let t2 = embed_aux(&tb, false);
        let rab = kron(&r9(u - v, eta), &rest);
        let lhs = &(&rab * &t1) * &t2;
        let rhs = &(&t2 * &t1) * &rab;
        assert!(rel_diff(&lhs, &rhs) < 1e-12);
    }

    #[test]
    fn homogeneous_hat_is_reversed_product() {
        let p = table_params(2);
        let u = c(0.2, 0.05);
        let shape = aux_shape(2);
        let r10 = embed_pair(&r9(u, p.eta), 1, 0, &shape).unwrap();
        let r20 = embed_pair(&r9(u, p.eta), 2, 0, &shape).unwrap();
        assert!(rel_diff(&(&r10 * &r20), &monodromy_hat(u, &p).matrix) < 1e-15);
    }

    #[test]
    fn unitarity_composition() {
        let p = inhom(2);
        let u = c(0.27, -0.08);
        let t = monodromy(u, &p).matrix;
        let th = monodromy_hat(-u, &p).matrix;
        let rho: Cplx = p.theta.iter().map(|&t| crate::rmatrix::rho1(u - t, p.eta)).product();
        assert!(rel_diff(&CMat::identity(27).scale(rho), &(&t * &th)) < 1e-13);
    }

    #[test]
    fn empty_chain_double_row_is_k_minus() {
        let p = table_params(0);
        let u = c(0.3, 0.2);
        assert!(rel_diff(&k_minus(u, &p), &double_row(u, &p).matrix) < 1e-15);
    }

    #[test]
    fn transfer_identity_at_origin() {
        for n in [2, 3] {
            let (s, dev) = identity_at_origin(&table_params(n));
            assert!(dev < 1e-11, "n={n} dev={dev}");
            let pinned = if n == 2 { -0.00017554522377942456 } else { -7.115933828355135e-06 };
            assert!((s - re(pinned)).norm() < 1e-12 * pinned.abs().max(1e-3), "{s}");
        }
    }

    #[test]
    fn analytic_derivative_matches_extrapolation() {
        let p = inhom(2);
        let u = c(0.13, 0.21);
        let a = transfer_derivative(u, &p).matrix;
        let fd = transfer_derivative_fd(u, &p, 1e-4, 5e-5);
        assert!(rel_diff(&a, &fd) < 1e-8);
    }

    #[test]
    fn table_one_spectrum() {
        let levels = spectrum(&table_params(2)).unwrap();
        let mut expect = [
            5.3807982858, 4.8827952486, 3.5453692295, 2.7734720648, 2.3345140250, 0.6052190547,
            -0.1238250060, -1.6800801819, -2.5834417305,
        ];
        expect.sort_by(f64::total_cmp);
        assert_eq!(levels.len(), 9);
        for (l, e) in levels.iter().zip(expect) {
            assert!((l.energy - re(e)).norm() < 1e-9, "{} vs {e}", l.energy);
        }
    }

    #[test]
    fn hamiltonian_commutes_with_transfer() {
        let p = table_params(2);
        let h = hamiltonian(&p).unwrap().op.matrix;
        let t = transfer(c(0.37, -0.22), &p).matrix;
        assert!(h.commutator(&t).norm() / (h.norm() * t.norm()) < 1e-9);
        assert!(hamiltonian(&inhom(2)).is_err());
    }

    #[test]
    fn one_site_spectrum_has_three_levels() {
        let levels = spectrum(&table_params(1)).unwrap();
        assert_eq!(levels.len(), 3);
        assert!(levels.iter().all(|l| l.energy.is_finite()));
    }
}

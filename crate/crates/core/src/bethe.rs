//! Operator blocks of the double-row monodromy, the reference state, the
//! exchange relations between `A`, `B_i`, `D̃_ij`, and the full Bethe state.

use crate::bae::BetheRoots;
use crate::boundary::{gauge_params, k_minus, GaugeParams, ModelParams};
use crate::chain::{double_row, hamiltonian, transfer};
use crate::error::{Error, Result};
use crate::linalg::{rel_diff, vnorm, CMat, Cplx, ONE, ZERO};
use crate::nested::{nested_state, NestedState};
use crate::rmatrix::r4;
use crate::tq::{a0, b0, energy, lambda_tq, POLE_TOL};

/// The nine blocks of `𝕋₀(u)` over the auxiliary indices:
/// `[[A, B₁, B₂], [C₁, D₁₁, D₁₂], [C₂, D₂₁, D₂₂]]`.
#[derive(Clone, Debug)]
pub struct BlockOperators {
    pub a_op: CMat,
    pub b_ops: [CMat; 2],
    pub c_ops: [CMat; 2],
    pub d_ops: [[CMat; 2]; 2],
}

impl BlockOperators {
    pub fn reassemble(&self) -> CMat {
        let [b1, b2] = &self.b_ops;
        let [c1, c2] = &self.c_ops;
        let [[d11, d12], [d21, d22]] = &self.d_ops;
        CMat::from_blocks(&[
            vec![self.a_op.clone(), b1.clone(), b2.clone()],
            vec![c1.clone(), d11.clone(), d12.clone()],
            vec![c2.clone(), d21.clone(), d22.clone()],
        ])
    }

    /// `D̃ᵢⱼ(u) = Dᵢⱼ(u) − δᵢⱼ d(2u)/a(2u) A(u)`.
    pub fn d_tilde(&self, i: usize, j: usize, u: Cplx, eta: Cplx) -> CMat {
        if i == j {
            &self.d_ops[i][j] - &self.a_op.scale(d_ratio(u, eta))
        } else {
            self.d_ops[i][j].clone()
        }
    }
}

/// `d(2u)/a(2u) = e^{−2u} sinh η / sinh(2u+η)`.
fn d_ratio(u: Cplx, eta: Cplx) -> Cplx {
    (-2.0 * u).exp() * eta.sinh() / (2.0 * u + eta).sinh()
}

pub fn blocks(u: Cplx, params: &ModelParams) -> BlockOperators {
    let t = double_row(u, params).matrix;
    let b = |i, j| t.block(3, i, j);
    BlockOperators {
        a_op: b(0, 0),
        b_ops: [b(0, 1), b(0, 2)],
        c_ops: [b(1, 0), b(2, 0)],
        d_ops: [[b(1, 1), b(1, 2)], [b(2, 1), b(2, 2)]],
    }
}

/// `Ψ₀ = ⊗_{j=1..N} (1, 0, 0)ᵗ`.
pub fn reference_state(n: usize) -> Vec<Cplx> {
    let mut v = vec![ZERO; 3usize.pow(n as u32)];
    v[0] = ONE;
    v
}

fn action_residual(op: &CMat, v: &[Cplx], eig: Cplx) -> f64 {
    let w = op.matvec(v);
    w.iter().zip(v).map(|(a, b)| (a - eig * b).norm_sqr()).sum::<f64>().sqrt() / vnorm(v)
}

/// Deviations of the block actions on `Ψ₀` from their vacuum eigenvalues.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct VacuumResiduals {
    pub a: f64,
    pub d: [[f64; 2]; 2],
    /// `‖C_i Ψ₀‖`, relative to `‖𝕋₀(u)‖`.
    pub c: [f64; 2],
    /// `‖B_i Ψ₀‖`, nonzero.
    pub b_norms: [f64; 2],
}

impl VacuumResiduals {
    pub fn max_residual(&self) -> f64 {
        let d = self.d.iter().flatten().copied().fold(0.0, f64::max);
        self.a.max(d).max(self.c[0]).max(self.c[1])
    }
}

pub fn vacuum_residuals(u: Cplx, params: &ModelParams) -> VacuumResiduals {
    let eta = params.eta;
    let bl = blocks(u, params);
    let psi = reference_state(params.n_sites());
    let km = k_minus(u, params);
    let (av, bv) = (a0(u, params), b0(u, params));
    let r = d_ratio(u, eta);
    let scale = bl.reassemble().norm();
    let d_eig = |i: usize, j: usize| {
        let k = km[(i + 1, j + 1)] * bv;
        if i == j {
            k + r * km[(0, 0)] * (av - bv)
        } else {
            k
        }
    };
    VacuumResiduals {
        a: action_residual(&bl.a_op, &psi, km[(0, 0)] * av) / scale,
        d: [0, 1].map(|i| [0, 1].map(|j| action_residual(&bl.d_ops[i][j], &psi, d_eig(i, j)) / scale)),
        c: [0, 1].map(|i| vnorm(&bl.c_ops[i].matvec(&psi)) / scale),
        b_norms: [0, 1].map(|i| vnorm(&bl.b_ops[i].matvec(&psi))),
    }
}

/// Relative residuals of the three exchange relations, each the largest
/// over its free auxiliary indices.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CommutationResiduals {
    pub ab: f64,
    pub db: f64,
    pub bb: f64,
}

impl CommutationResiduals {
    pub fn max(&self) -> f64 {
        self.ab.max(self.db).max(self.bb)
    }
}

/// Checks `A(u)B_j(λ)`, `D̃ᵢⱼ(u)B_k(λ)` and `B_i(u)B_j(λ)` against their
/// exchanged forms as full operator identities.
pub fn check_commutations(u: Cplx, lambda: Cplx, params: &ModelParams) -> Result<CommutationResiduals> {
    let eta = params.eta;
    let a = |x: Cplx| (x + eta).sinh();
    let b = |x: Cplx| x.sinh();
    let cf = |x: Cplx| x.exp() * eta.sinh();
    let df = |x: Cplx| (-x).exp() * eta.sinh();
    for (z, what) in [
        (a(u - lambda), "a(u−λ)"),
        (b(u - lambda), "b(u−λ)"),
        (a(u + lambda), "a(u+λ)"),
        (b(u + lambda + eta), "b(u+λ+η)"),
        (a(2.0 * u), "a(2u)"),
        (a(2.0 * lambda), "a(2λ)"),
    ] {
        if z.norm() < POLE_TOL {
            return Err(Error::PoleSet(format!("{what} = {z} in an exchange coefficient")));
        }
    }
    let (tu, tl) = (blocks(u, params), blocks(lambda, params));
    let r_uv = r4(u - lambda, eta);
    let r_sum = r4(u + lambda + eta, eta);
    let r_2u = r4(2.0 * u + eta, eta);
    let rr = |r: &CMat, i: usize, j: usize, k: usize, l: usize| r[(2 * i + j, 2 * k + l)];
    let dt_u = |i, j| tu.d_tilde(i, j, u, eta);
    let dt_l = |i, j| tl.d_tilde(i, j, lambda, eta);
    let zero = || CMat::zeros(tu.a_op.rows(), tu.a_op.cols());

    let mut bb = 0.0f64;
    for i in 0..2 {
        for j in 0..2 {
            let lhs = &tu.b_ops[i] * &tl.b_ops[j];
            let mut rhs = zero();
            for k in 0..2 {
                for l in 0..2 {
                    let coef = rr(&r_uv, i, j, l, k) / a(u - lambda);
                    rhs = &rhs + &(&tl.b_ops[k] * &tu.b_ops[l]).scale(coef);
                }
            }
            bb = bb.max(rel_diff(&lhs, &rhs));
        }
    }

    let mut ab = 0.0f64;
    for j in 0..2 {
        let lhs = &tu.a_op * &tl.b_ops[j];
        let k1 = a(lambda - u) / b(lambda - u) * b(lambda + u) / a(lambda + u);
        let k2 = b(2.0 * lambda) / a(2.0 * lambda) * cf(u - lambda) / b(lambda - u);
        let k3 = cf(u + lambda) / a(u + lambda);
        let mut rhs = &(&tl.b_ops[j] * &tu.a_op).scale(k1) - &(&tu.b_ops[j] * &tl.a_op).scale(k2);
        for i in 0..2 {
            rhs = &rhs - &(&tu.b_ops[i] * &dt_l(i, j)).scale(k3);
        }
        ab = ab.max(rel_diff(&lhs, &rhs));
    }

    let mut db = 0.0f64;
    for i in 0..2 {
        for j in 0..2 {
            for k in 0..2 {
                let lhs = &dt_u(i, j) * &tl.b_ops[k];
                let mut rhs = zero();
                let den1 = b(u + lambda + eta) * b(u - lambda);
                for d in 0..2 {
                    for e in 0..2 {
                        for g in 0..2 {
                            let coef: Cplx =
                                (0..2).map(|f| rr(&r_sum, i, d, e, f) * rr(&r_uv, f, g, k, j)).sum::<Cplx>() / den1;
                            rhs = &rhs + &(&tl.b_ops[d] * &dt_u(e, g)).scale(coef);
                        }
                    }
                }
                let den2 = a(2.0 * u) * b(u - lambda);
                for d in 0..2 {
                    for e in 0..2 {
                        let coef = rr(&r_2u, i, d, e, j) * cf(lambda - u) / den2;
                        rhs = &rhs - &(&tu.b_ops[d] * &dt_l(e, k)).scale(coef);
                    }
                }
                for d in 0..2 {
                    let coef = b(2.0 * lambda) * df(u + lambda) / a(2.0 * lambda) * rr(&r_2u, i, d, k, j)
                        / (a(2.0 * u) * a(u + lambda));
                    rhs = &rhs + &(&tu.b_ops[d] * &tl.a_op).scale(coef);
                }
                db = db.max(rel_diff(&lhs, &rhs));
            }
        }
    }
    Ok(CommutationResiduals { ab, db, bb })
}

/// Which nested component multiplies which string of creation operators.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Pairing {
    /// `F^{a₁…a_M}` (with `a₁` the slowest index of `|F⟩`) multiplies
    /// `B_{a_M}(u_M)⋯B_{a₁}(u₁)Ψ₀`.
    Forward,
    /// The index string of `F` read in reverse.
    Reversed,
}

/// The pairing that reproduces the tabulated two-excitation states.
pub const TABLE_PAIRING: Pairing = Pairing::Forward;

/// `Ψ = Σ F^{a₁…a_M} B_{a_M}(u_M)⋯B_{a₁}(u₁)Ψ₀`, with `B_{a₁}(u₁)` applied first.
pub fn assemble_full_state(roots: &BetheRoots, nested: &NestedState, params: &ModelParams, pairing: Pairing) -> Result<Vec<Cplx>> {
    let m = roots.m();
    if nested.m_excitations != m || nested.vector.len() != 1 << m {
        return Err(Error::DimensionMismatch(format!(
            "{m} roots against a nested state with {} excitations and {} components",
            nested.m_excitations,
            nested.vector.len()
        )));
    }
    let psi0 = reference_state(params.n_sites());
    if m == 0 {
        return Ok(psi0.iter().map(|x| x * nested.vector[0]).collect());
    }
    let bs: Vec<[CMat; 2]> = roots.u_roots.iter().map(|&u| blocks(u, params).b_ops).collect();
    let mut psi = vec![ZERO; psi0.len()];
    let mut scale = 0.0f64;
    for code in 0..(1usize << m) {
        // a_k is bit (m−1−k) of code, so a₁ is the slowest index.
        let idx: Vec<usize> = (0..m).map(|k| (code >> (m - 1 - k)) & 1).collect();
        let mut v = psi0.clone();
        for k in 0..m {
            v = bs[k][idx[k]].matvec(&v);
        }
        let f_index = match pairing {
            Pairing::Forward => code,
            Pairing::Reversed => idx.iter().fold(0, |acc, &a| acc >> 1 | a << (m - 1)),
        };
        let f = nested.vector[f_index];
        scale = scale.max(f.norm() * vnorm(&v));
        for (p, x) in psi.iter_mut().zip(&v) {
            *p += f * x;
        }
    }
    let n = vnorm(&psi);
    if !psi.iter().all(|x| x.is_finite()) {
        return Err(Error::NonFinite("Bethe state".into()));
    }
    if n <= crate::nested::DEGENERATE_TOL * scale {
        return Err(Error::DegenerateState(format!("Ψ vanishes (norm {n:.3e})")));
    }
    Ok(psi)
}

/// Nested and full Bethe states of a root set.
pub fn bethe_state(roots: &BetheRoots, params: &ModelParams, pairing: Pairing) -> Result<(NestedState, Vec<Cplx>)> {
    let g = gauge_params(params, roots.m())?;
    let f = nested_state(roots, &g)?;
    let psi = assemble_full_state(roots, &f, params, pairing)?;
    Ok((f, psi))
}

/// Ten fixed points at which `t(u)Ψ = Λ(u)Ψ` is checked.
pub fn t_grid() -> Vec<Cplx> {
    (0..10)
        .map(|k| {
            let t = k as f64;
            Cplx::new(-0.45 + 0.1 * t, 0.3 * (1.3 * t + 0.4).sin())
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct EigenResidual {
    /// `‖HΨ − EΨ‖/‖Ψ‖` with `E` from the roots; absent off the homogeneous chain.
    pub h_residual: Option<f64>,
    pub energy: Option<Cplx>,
    /// `(u, ‖t(u)Ψ − Λ(u)Ψ‖/‖Ψ‖)` over [`t_grid`].
    pub t_residuals: Vec<(Cplx, f64)>,
}

impl EigenResidual {
    pub fn max_t_residual(&self) -> f64 {
        self.t_residuals.iter().map(|r| r.1).fold(0.0, f64::max)
    }
}

pub fn eigen_residual(psi: &[Cplx], roots: &BetheRoots, params: &ModelParams, g: &GaugeParams) -> Result<EigenResidual> {
    let (h_residual, energy) = if params.is_homogeneous() {
        let h = hamiltonian(params)?;
        let e = energy(roots, params, g)?;
        (Some(action_residual(&h.op.matrix, psi, e)), Some(e))
    } else {
        (None, None)
    };
    let t_residuals = t_grid()
        .into_iter()
        .map(|u| Ok((u, action_residual(&transfer(u, params).matrix, psi, lambda_tq(u, roots, params, g)?))))
        .collect::<Result<Vec<_>>>()?;
    Ok(EigenResidual { h_residual, energy, t_residuals })
}

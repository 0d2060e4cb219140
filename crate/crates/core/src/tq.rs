//! Scalar functions of the inhomogeneous T-Q construction and the
//! eigenvalue functions `Λ(u)`, `Λ̂(λ)` and `Λ₀(u)`.
//!
//! Every function that enters a Bethe equation is generic over
//! [`Scalar`], so the same code yields values and exact derivatives.

use crate::bae::BetheRoots;
use crate::boundary::{k_minus, k_plus, GaugeParams, ModelParams};
use crate::error::{Error, Result};
use crate::linalg::{Cplx, ONE};
use crate::scalar::{Dual, Scalar};

/// Distance below which an evaluation point counts as sitting on a pole.
pub const POLE_TOL: f64 = 1e-8;

fn lift<S: Scalar>(x: Cplx) -> S {
    S::from(x)
}

/// `Q⁽¹⁾(u) = ∏ sinh(u − u_i) sinh(u + u_i + η)`.
pub fn q1<S: Scalar>(u: S, us: &[S], eta: Cplx) -> S {
    us.iter().fold(lift(ONE), |acc, &x| acc * (u - x).sinh() * (u + x + eta).sinh())
}

/// `Q⁽²⁾(λ) = ∏ sinh(λ − g_j − η/2) sinh(λ + g_j + 3η/2)`.
pub fn q2<S: Scalar>(lambda: S, gs: &[S], eta: Cplx) -> S {
    gs.iter().fold(lift(ONE), |acc, &g| {
        acc * (lambda - g - eta * 0.5).sinh() * (lambda + g + eta * 1.5).sinh()
    })
}

/// `b₀(u) = ∏ sinh(u + θ_j) sinh(u − θ_j)`.
pub fn b0<S: Scalar>(u: S, params: &ModelParams) -> S {
    params.theta.iter().fold(lift(ONE), |acc, &t| acc * (u + t).sinh() * (u - t).sinh())
}

/// `a₀(u) = b₀(u + η)`.
pub fn a0<S: Scalar>(u: S, params: &ModelParams) -> S {
    b0(u + params.eta, params)
}

pub fn kfun1<S: Scalar>(u: S, params: &ModelParams) -> S {
    let eta = params.eta;
    let (mi, pl) = (&params.minus, &params.plus);
    let left = u.exp() * (-u + mi.zeta).sinh() + (u * 2.0).exp() * (u * 2.0).sinh() * mi.c;
    let right = (-u + eta * 1.5).exp() * (u + pl.zeta + eta * 0.5).sinh()
        - (u * -2.0 + eta).exp() * (u * 2.0 + eta).sinh() * pl.c;
    left * right
}

pub fn kfun2<S: Scalar>(lambda: S, g: &GaugeParams) -> S {
    let pref = -g.eta.exp() / (g.p * g.q);
    (lambda - g.alpha_m).sinh()
        * (lambda - g.beta_m).cosh()
        * (lambda - g.alpha_p).sinh()
        * (lambda - g.beta_p).cosh()
        * pref
}

pub fn kfun3<S: Scalar>(lambda: S, g: &GaugeParams) -> S {
    let pref = -g.eta.exp() / (g.p * g.q);
    let x = -lambda - g.eta;
    (x - g.alpha_m).sinh() * (x - g.beta_m).cosh() * (x - g.alpha_p).sinh() * (x - g.beta_p).cosh() * pref
}

/// Constant of the inhomogeneous term for an `M`-excitation sector.
///
/// The phase difference is taken between `θ₋` and the plus phase of the
/// gauge frame, `θ₊ + η`; only this combination matches the nested
/// transfer-matrix spectrum.
pub fn hconst(m: usize, g: &GaugeParams) -> Cplx {
    let eta = g.eta;
    let sum = (m as f64 + 1.0) * eta + g.alpha_m + g.beta_m + g.alpha_p + g.beta_p;
    eta.exp() / (2.0 * g.p * g.q) * (sum.cosh() - (g.theta_m - g.theta_p_frame()).cosh())
}

/// The four terms of `Λ(u)` for roots `(us, gs)`.
pub fn lambda_tq_terms<S: Scalar>(u: S, us: &[S], gs: &[S], params: &ModelParams, g: &GaugeParams) -> [S; 4] {
    let eta = params.eta;
    let s = |x: S| x.sinh();
    let h = hconst(us.len(), g);
    let (bz, q1u, q2h) = (b0(u, params), q1(u, us, eta), q2(u + eta * 0.5, gs, eta));
    let s2 = s(u * 2.0);
    let s2_1 = s(u * 2.0 + eta);
    let s2_2 = s(u * 2.0 + eta * 2.0);
    let s2_3 = s(u * 2.0 + eta * 3.0);
    let t1 = s2_3 / s2_1 * kfun1(u, params) * a0(u, params) * q1(u - eta, us, eta) / q1u;
    let t2 = s2 * s2_3 / (s2_1 * s2_2) * kfun2(u + eta * 0.5, g) * bz * q1(u + eta, us, eta)
        * q2(u - eta * 0.5, gs, eta)
        / (q1u * q2h);
    let t3 = s2 / s2_2 * kfun3(u + eta * 0.5, g) * bz * q2(u + eta * 1.5, gs, eta) / q2h;
    let t4 = s2 * s2_3 * bz * q1(u + eta, us, eta) / q2h * h;
    [t1, t2, t3, t4]
}

/// `Λ(u)`, rejecting evaluation points on a zero of `Q⁽¹⁾(u)` or
/// `Q⁽²⁾(u + η/2)`.
pub fn lambda_tq(u: Cplx, roots: &BetheRoots, params: &ModelParams, g: &GaugeParams) -> Result<Cplx> {
    let eta = params.eta;
    let near = roots.u_roots.iter().any(|&x| (u - x).sinh().norm() < POLE_TOL || (u + x + eta).sinh().norm() < POLE_TOL)
        || roots.g_roots.iter().any(|&x| (u - x).sinh().norm() < POLE_TOL || (u + x + 2.0 * eta).sinh().norm() < POLE_TOL);
    if near {
        return Err(Error::PoleSet(format!("Λ evaluated within {POLE_TOL} of a root at u = {u}")));
    }
    let v: Cplx = lambda_tq_terms(u, &roots.u_roots, &roots.g_roots, params, g).iter().sum();
    if !v.is_finite() {
        return Err(Error::NonFinite(format!("Λ({u})")));
    }
    Ok(v)
}

fn abar(lambda: Cplx, lambdas: &[Cplx], eta: Cplx) -> Cplx {
    lambdas.iter().map(|&l| (lambda + l + eta).sinh() * (lambda - l + eta).sinh()).product()
}

fn dbar(lambda: Cplx, lambdas: &[Cplx]) -> Cplx {
    lambdas.iter().map(|&l| (lambda - l).sinh() * (lambda + l).sinh()).product()
}

/// The three terms of the nested eigenvalue `Λ̂(λ)`, with `λ_j = u_j + η/2`.
pub fn lambda_hat_terms(lambda: Cplx, roots: &BetheRoots, g: &GaugeParams) -> [Cplx; 3] {
    let eta = g.eta;
    let lambdas = roots.lambdas(eta);
    let gs = &roots.g_roots;
    let h = hconst(roots.m(), g);
    let s = |x: Cplx| x.sinh();
    let (sm, s0, s1, s2) = (s(2.0 * lambda - eta), s(2.0 * lambda), s(2.0 * lambda + eta), s(2.0 * lambda + 2.0 * eta));
    let q2l = q2(lambda, gs, eta);
    let a = abar(lambda, &lambdas, eta);
    let t1 = sm * s2 / (s0 * s1) * kfun2(lambda, g) * a * q2(lambda - eta, gs, eta) / q2l;
    let t2 = sm / s1 * kfun3(lambda, g) * dbar(lambda, &lambdas) * q2(lambda + eta, gs, eta) / q2l;
    let t3 = sm * s2 * a * abar(-lambda - eta, &lambdas, eta) * h / q2l;
    [t1, t2, t3]
}

pub fn lambda_hat(lambda: Cplx, roots: &BetheRoots, g: &GaugeParams) -> Result<Cplx> {
    let eta = g.eta;
    if roots.g_roots.iter().any(|&x| {
        (lambda - x - 0.5 * eta).sinh().norm() < POLE_TOL || (lambda + x + 1.5 * eta).sinh().norm() < POLE_TOL
    }) {
        return Err(Error::PoleSet(format!("Λ̂ evaluated within {POLE_TOL} of a root at λ = {lambda}")));
    }
    let v: Cplx = lambda_hat_terms(lambda, roots, g).iter().sum();
    if !v.is_finite() {
        return Err(Error::NonFinite(format!("Λ̂({lambda})")));
    }
    Ok(v)
}

/// Eigenvalue of the transfer matrix on the reference state.
pub fn vacuum_lambda(u: Cplx, params: &ModelParams) -> Cplx {
    let eta = params.eta;
    let d2a = (-2.0 * u).exp() * eta.sinh() / (2.0 * u + eta).sinh();
    let (kp, km) = (k_plus(u, params), k_minus(u, params));
    let (av, bv) = (a0(u, params), b0(u, params));
    let mut r = kp[(0, 0)] * km[(0, 0)] * av + d2a * (kp[(1, 1)] + kp[(2, 2)]) * km[(0, 0)] * (av - bv);
    for i in 1..3 {
        for j in 1..3 {
            r += kp[(i, j)] * km[(j, i)] * bv;
        }
    }
    r
}

/// Relative tolerance of the finite-difference guard on the energy.
pub const ENERGY_FD_TOL: f64 = 1e-8;

/// `Λ'(0)` by forward-mode differentiation and `Λ(0)`.
fn lambda_at_origin(roots: &BetheRoots, params: &ModelParams, g: &GaugeParams) -> (Cplx, Cplx) {
    let us: Vec<Dual> = roots.u_roots.iter().map(|&x| Dual::constant(x)).collect();
    let gs: Vec<Dual> = roots.g_roots.iter().map(|&x| Dual::constant(x)).collect();
    let t = lambda_tq_terms(Dual::variable(Cplx::new(0.0, 0.0)), &us, &gs, params, g);
    let total = t.iter().fold(Dual::constant(Cplx::new(0.0, 0.0)), |a, &b| a + b);
    (total.v, total.d)
}

/// `sinh η · Λ'(0)/Λ(0)` by Richardson-extrapolated central differences.
pub fn energy_fd(roots: &BetheRoots, params: &ModelParams, g: &GaugeParams) -> Cplx {
    let f = |u: f64| -> Cplx {
        lambda_tq_terms(Cplx::new(u, 0.0), &roots.u_roots, &roots.g_roots, params, g).iter().sum()
    };
    let d = |h: f64| (f(h) - f(-h)) / (2.0 * h);
    let (h1, h2) = (1e-3, 5e-4);
    let deriv = (4.0 * d(h2) - d(h1)) / 3.0;
    params.eta.sinh() * deriv / f(0.0)
}

/// `E = sinh η · Λ'(0)/Λ(0)` at the homogeneous point.
pub fn energy(roots: &BetheRoots, params: &ModelParams, g: &GaugeParams) -> Result<Cplx> {
    if !params.is_homogeneous() {
        return Err(Error::Inhomogeneous);
    }
    let (v, d) = lambda_at_origin(roots, params, g);
    if v.norm() == 0.0 || !v.is_finite() {
        return Err(Error::DegenerateState(format!("Λ(0) = {v}")));
    }
    let e = params.eta.sinh() * d / v;
    let fd = energy_fd(roots, params, g);
    let disc = (e - fd).norm() / e.norm().max(1.0);
    if !(disc <= ENERGY_FD_TOL) {
        return Err(Error::NoConvergence(format!("energy finite-difference guard disagrees by {disc:.3e}")));
    }
    Ok(e)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::boundary::gauge_params;
    use crate::chain::{identity_at_origin, transfer};
    use crate::linalg::{vnorm, vsub, ZERO};
    use crate::tables::table_params;
    use proptest::prelude::*;

    fn c(a: f64, b: f64) -> Cplx {
        Cplx::new(a, b)
    }

    fn setup(n: usize, m: usize) -> (ModelParams, GaugeParams) {
        let p = table_params(n);
        let g = gauge_params(&p, m).unwrap();
        (p, g)
    }

    #[test]
    fn empty_products() {
        let eta = c(0.2, 0.0);
        assert_eq!(q1::<Cplx>(c(0.3, 0.1), &[], eta), ONE);
        assert_eq!(q2::<Cplx>(c(0.3, 0.1), &[], eta), ONE);
    }

    #[test]
    fn q1_vanishes_on_roots_and_is_symmetric() {
        let eta = c(0.2, 0.0);
        let us = [c(0.18, 0.02), c(-0.1, 0.24)];
        for &x in &us {
            assert!(q1(x, &us, eta).norm() < 1e-16);
        }
        let u = c(0.37, -0.41);
        assert!((q1(u, &us, eta) - q1(-u - eta, &us, eta)).norm() < 1e-14);
        let gs = [c(0.17, 0.0), c(-0.2, 0.3)];
        let l = c(0.12, 0.33);
        assert!((q2(l, &gs, eta) - q2(-l - eta, &gs, eta)).norm() < 1e-14);
    }

    #[test]
    fn kfun1_at_origin() {
        let (p, _) = setup(2, 0);
        let eta = p.eta;
        let pl = &p.plus;
        let expect = p.minus.zeta.sinh()
            * ((1.5 * eta).exp() * (pl.zeta + 0.5 * eta).sinh() - pl.c * eta.exp() * eta.sinh());
        assert!((kfun1(ZERO, &p) - expect).norm() < 1e-15);
    }

    #[test]
    fn kfun3_is_reflected_kfun2() {
        let (_, g) = setup(2, 2);
        for l in [c(0.31, -0.2), c(-0.7, 0.45), c(0.05, 1.1)] {
            assert!((kfun3(l, &g) - kfun2(-l - g.eta, &g)).norm() < 1e-14);
        }
    }

    #[test]
    fn hconst_regression() {
        let (_, g) = setup(2, 2);
        let h = hconst(2, &g);
        assert!((h - c(-2.5905648400435406, 0.0)).norm() < 1e-12, "{h}");
    }

    #[test]
    fn vacuum_is_lambda_without_roots() {
        let (p, g) = setup(2, 0);
        let none = BetheRoots::empty();
        for k in 0..20 {
            let t = k as f64;
            let u = c(-0.8 + 0.083 * t, 0.4 * (1.3 * t).cos());
            let a = lambda_tq(u, &none, &p, &g).unwrap();
            let b = vacuum_lambda(u, &p);
            assert!((a - b).norm() <= 1e-11 * b.norm().max(1.0), "u={u}: {a} vs {b}");
        }
    }

    #[test]
    fn vacuum_eigenvalue_of_transfer() {
        let (p, _) = setup(2, 0);
        let (s, _) = identity_at_origin(&p);
        assert!((vacuum_lambda(ZERO, &p) - s).norm() < 1e-12 * s.norm().max(1e-12));
        let p = p.with_theta(vec![c(0.01, 0.0), c(0.02, 0.0)]);
        let u = c(0.23, -0.17);
        let t = transfer(u, &p).matrix;
        let mut psi = vec![ZERO; 9];
        psi[0] = ONE;
        let r = vnorm(&vsub(&t.matvec(&psi), &crate::linalg::vscale(&psi, vacuum_lambda(u, &p))));
        assert!(r <= 1e-11 * t.norm());
    }

    #[test]
    fn vacuum_energy() {
        let (p, g) = setup(2, 0);
        let e = energy(&BetheRoots::empty(), &p, &g).unwrap();
        assert!((e - c(3.5453692295, 0.0)).norm() < 1e-9, "{e}");
    }

    #[test]
    fn lambda_hat_without_roots_regression() {
        let (_, g) = setup(2, 0);
        let v = lambda_hat(c(0.3, 0.1), &BetheRoots::empty(), &g).unwrap();
        let terms = lambda_hat_terms(c(0.3, 0.1), &BetheRoots::empty(), &g);
        assert!((terms[0] + terms[1] + terms[2] - v).norm() < 1e-15);
        assert!((v - c(-0.14276782659260534, -0.091663201016143)).norm() < 1e-12, "{v}");
    }

    #[test]
    fn lambda_hat_on_a_root_keeps_first_term() {
        let (_, g) = setup(2, 2);
        let roots = BetheRoots::new(vec![c(0.18, 0.01), c(0.24, -0.02)], vec![c(0.17, 0.0), c(0.26, 0.0)], g.eta).unwrap();
        let lk = roots.lambdas(g.eta)[0];
        let t = lambda_hat_terms(lk, &roots, &g);
        assert!(t[1].norm() < 1e-15 && t[2].norm() < 1e-15);
        assert!(t[0].norm() > 1e-6);
    }

    #[test]
    fn energy_guard_and_origin() {
        let (p, g) = setup(2, 1);
        let roots = BetheRoots::new(vec![c(-0.3628, 0.0)], vec![c(0.1645, 0.0)], g.eta).unwrap();
        let (v, _) = lambda_at_origin(&roots, &p, &g);
        let direct = lambda_tq(ZERO, &roots, &p, &g).unwrap();
        assert!((v - direct).norm() < 1e-14);
        let inhom = p.with_theta(vec![c(0.01, 0.0), ZERO]);
        assert!(matches!(energy(&roots, &inhom, &g), Err(Error::Inhomogeneous)));
    }

    proptest! {
        #[test]
        fn generic_and_plain_evaluation_agree(a in -0.6f64..0.6, b in -0.6f64..0.6) {
            let (p, g) = setup(2, 2);
            let us = [c(0.18, 0.01), c(0.24, -0.02)];
            let gs = [c(0.17, 0.0), c(0.26, 0.0)];
            let u = c(a, b);
            let plain: Cplx = lambda_tq_terms(u, &us, &gs, &p, &g).iter().sum();
            let du: Vec<Dual> = us.iter().map(|&x| Dual::constant(x)).collect();
            let dg: Vec<Dual> = gs.iter().map(|&x| Dual::constant(x)).collect();
            let dual = lambda_tq_terms(Dual::variable(u), &du, &dg, &p, &g);
            let v = dual.iter().fold(Cplx::new(0.0, 0.0), |s, t| s + t.v);
            prop_assert!((v - plain).norm() <= 1e-12 * plain.norm().max(1.0));
        }
    }
}

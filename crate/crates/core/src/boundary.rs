//! Boundary reflection matrices, their nested 2x2 descendants, and the
//! gauge-frame parameterization of the nested boundary.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::linalg::{kron, rel_diff, CMat, Cplx, I, ONE, ZERO};
use crate::rmatrix::{crossing_m, r4, r9, sigma, swap_factors};

/// One boundary: `(ζ, c, c1)` and the derived `c2`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundarySide {
    pub zeta: Cplx,
    pub c: Cplx,
    pub c1: Cplx,
    pub c2: Cplx,
}

impl BoundarySide {
    pub fn new(zeta: Cplx, c: Cplx, c1: Cplx) -> Result<Self> {
        Ok(BoundarySide { zeta, c, c1, c2: c2_from_constraint(c, zeta, c1)? })
    }

    /// `c² − c1 c2 − c e^ζ`, zero for a consistent side.
    pub fn constraint_defect(&self) -> Cplx {
        self.c * self.c - self.c1 * self.c2 - self.c * self.zeta.exp()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ModelParams {
    pub eta: Cplx,
    pub minus: BoundarySide,
    pub plus: BoundarySide,
    pub theta: Vec<Cplx>,
}

impl ModelParams {
    pub fn new(eta: Cplx, minus: BoundarySide, plus: BoundarySide, theta: Vec<Cplx>) -> Self {
        ModelParams { eta, minus, plus, theta }
    }

    pub fn n_sites(&self) -> usize {
        self.theta.len()
    }

    pub fn is_homogeneous(&self) -> bool {
        self.theta.iter().all(|t| *t == ZERO)
    }

    pub fn with_theta(&self, theta: Vec<Cplx>) -> Self {
        ModelParams { theta, ..self.clone() }
    }

    pub fn all_finite(&self) -> bool {
        let s = |b: &BoundarySide| [b.zeta, b.c, b.c1, b.c2].iter().all(|x| x.is_finite());
        self.eta.is_finite() && s(&self.minus) && s(&self.plus) && self.theta.iter().all(|x| x.is_finite())
    }
}

/// `c2 = (c² − c e^ζ) / c1`.
pub fn c2_from_constraint(c: Cplx, zeta: Cplx, c1: Cplx) -> Result<Cplx> {
    if c1 == ZERO {
        return Err(Error::InvalidParams("c1 must be nonzero to derive c2".into()));
    }
    Ok((c * c - c * zeta.exp()) / c1)
}

fn k_lower(u: Cplx, s: &BoundarySide) -> CMat {
    let e = u.exp();
    let sh2 = (2.0 * u).sinh();
    let k22 = e * (s.zeta - u).sinh();
    let mut k = CMat::zeros(3, 3);
    k[(0, 0)] = k22 + s.c * (2.0 * u).exp() * sh2;
    k[(1, 1)] = k22;
    k[(1, 2)] = s.c1 * sh2;
    k[(2, 1)] = s.c2 * sh2;
    k[(2, 2)] = (-u).exp() * (s.zeta + u).sinh();
    k
}

fn k_lower_deriv(u: Cplx, s: &BoundarySide) -> CMat {
    let e = u.exp();
    let sh2 = (2.0 * u).sinh();
    let ch2 = (2.0 * u).cosh();
    let dk22 = e * ((s.zeta - u).sinh() - (s.zeta - u).cosh());
    let mut k = CMat::zeros(3, 3);
    k[(0, 0)] = dk22 + s.c * (2.0 * u).exp() * (2.0 * sh2 + 2.0 * ch2);
    k[(1, 1)] = dk22;
    k[(1, 2)] = s.c1 * 2.0 * ch2;
    k[(2, 1)] = s.c2 * 2.0 * ch2;
    k[(2, 2)] = (-u).exp() * ((s.zeta + u).cosh() - (s.zeta + u).sinh());
    k
}

pub fn k_minus(u: Cplx, params: &ModelParams) -> CMat {
    k_lower(u, &params.minus)
}

pub fn k_minus_deriv(u: Cplx, params: &ModelParams) -> CMat {
    k_lower_deriv(u, &params.minus)
}

/// `K⁺(u) = M K⁻(−u − 3η/2)` with the primed couplings.
pub fn k_plus(u: Cplx, params: &ModelParams) -> CMat {
    &crossing_m(params.eta) * &k_lower(-u - 1.5 * params.eta, &params.plus)
}

pub fn k_plus_deriv(u: Cplx, params: &ModelParams) -> CMat {
    (&crossing_m(params.eta) * &k_lower_deriv(-u - 1.5 * params.eta, &params.plus)).scale(-ONE)
}

/// Nested `K̄⁻` read off from the lower block of `K⁻`; singular at `sinh 2u = 0`.
pub fn k_bar_minus_extracted(u: Cplx, params: &ModelParams) -> CMat {
    let eta = params.eta;
    let k = k_minus(u, params);
    let shift = (-2.0 * u).exp() * eta.sinh() / (2.0 * u + eta).sinh() * k[(0, 0)];
    let f = (2.0 * u + eta).sinh() / (2.0 * u).sinh();
    CMat::from_rows([
        [f * (k[(1, 1)] - shift), f * k[(1, 2)]],
        [f * k[(2, 1)], f * (k[(2, 2)] - shift)],
    ])
}

pub fn k_bar_minus(u: Cplx, params: &ModelParams) -> CMat {
    let eta = params.eta;
    let s = &params.minus;
    let cs = s.c * eta.sinh();
    let sh = (2.0 * u + eta).sinh();
    CMat::from_rows([
        [(u + eta).exp() * (s.zeta - u).sinh() - cs, s.c1 * sh],
        [s.c2 * sh, (-u).exp() * (s.zeta + u + eta).sinh() - cs],
    ])
}

/// Nested `K̄⁺` as `e^{-η}` times the lower block of `K⁺`.
pub fn k_bar_plus_extracted(u: Cplx, params: &ModelParams) -> CMat {
    let k = k_plus(u, params);
    let f = (-params.eta).exp();
    CMat::from_rows([[f * k[(1, 1)], f * k[(1, 2)]], [f * k[(2, 1)], f * k[(2, 2)]]])
}

pub fn k_bar_plus(u: Cplx, params: &ModelParams) -> CMat {
    let eta = params.eta;
    let s = &params.plus;
    let sh = (-2.0 * u - 3.0 * eta).sinh();
    CMat::from_rows([
        [(-(u + eta / 2.0)).exp() * (s.zeta + 1.5 * eta + u).sinh(), eta.exp() * s.c1 * sh],
        [(-eta).exp() * s.c2 * sh, (u + eta / 2.0).exp() * (s.zeta - 1.5 * eta - u).sinh()],
    ])
}

/// Relative residual of `R12(u1−u2) K1(u1) R21(u1+u2) K2(u2) = K2(u2) R12(u1+u2) K1(u1) R21(u1−u2)`.
pub fn check_re(u1: Cplx, u2: Cplx, params: &ModelParams) -> f64 {
    let eta = params.eta;
    let id = CMat::identity(3);
    let k1 = kron(&k_minus(u1, params), &id);
    let k2 = kron(&id, &k_minus(u2, params));
    let r12 = |u| r9(u, eta);
    let r21 = |u| swap_factors(&r9(u, eta), 3);
    let lhs = &(&(&r12(u1 - u2) * &k1) * &r21(u1 + u2)) * &k2;
    let rhs = &(&(&k2 * &r12(u1 + u2)) * &k1) * &r21(u1 - u2);
    rel_diff(&lhs, &rhs)
}

/// Relative residual of the dual reflection equation for `K⁺`.
pub fn check_dual_re(u1: Cplx, u2: Cplx, params: &ModelParams) -> f64 {
    let eta = params.eta;
    let id = CMat::identity(3);
    let m = crossing_m(eta);
    let minv = CMat::from_diag(&[(-4.0 * eta).exp(), (-2.0 * eta).exp(), ONE]);
    let k1 = kron(&k_plus(u1, params), &id);
    let k2 = kron(&id, &k_plus(u2, params));
    let (m1, m1i) = (kron(&m, &id), kron(&minv, &id));
    let (m2, m2i) = (kron(&id, &m), kron(&id, &minv));
    let r12 = |u| r9(u, eta);
    let r21 = |u| swap_factors(&r9(u, eta), 3);
    let w = -u1 - u2 - 3.0 * eta;
    let lhs = &(&(&(&(&r12(u2 - u1) * &k1) * &m1i) * &r21(w)) * &m1) * &k2;
    let rhs = &(&(&(&(&k2 * &m2i) * &r12(w)) * &m2) * &k1) * &r21(u2 - u1);
    rel_diff(&lhs, &rhs)
}

/// Reflection equation of the nested boundary `K̄⁻` with the six-vertex `r`.
/// The nested chain pairs `u − u_j` with `u + u_j + η`, so the mirrored
/// argument carries the extra `η`.
pub fn check_nested_re(u1: Cplx, u2: Cplx, params: &ModelParams) -> f64 {
    let eta = params.eta;
    let id = CMat::identity(2);
    let k1 = kron(&k_bar_minus(u1, params), &id);
    let k2 = kron(&id, &k_bar_minus(u2, params));
    let r12 = |u| r4(u, eta);
    let r21 = |u| swap_factors(&r4(u, eta), 2);
    let s = u1 + u2 + eta;
    let lhs = &(&(&r12(u1 - u2) * &k1) * &r21(s)) * &k2;
    let rhs = &(&(&k2 * &r12(s)) * &k1) * &r21(u1 - u2);
    rel_diff(&lhs, &rhs)
}

/// Derived gauge-frame parameters of the nested open chain.
///
/// `theta_p` is `ln(2 q c1')`. In the gauge-frame transfer matrix the plus
/// boundary appears twisted by `σ(η)`, which shifts its effective phase to
/// `θ₊ + η` (see [`GaugeParams::theta_p_frame`]); `alpha` and the constant
/// `h` of the inhomogeneous T-Q relation are built from that shifted phase.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GaugeParams {
    pub eta: Cplx,
    pub alpha_m: Cplx,
    pub beta_m: Cplx,
    pub alpha_p: Cplx,
    pub beta_p: Cplx,
    pub theta_m: Cplx,
    pub theta_p: Cplx,
    pub p: Cplx,
    pub q: Cplx,
    pub xi1: Cplx,
    pub xi2: Cplx,
    /// `α` of the gauge vectors (dimensionless, multiplies η).
    pub alpha: Cplx,
    /// Starting gauge index `m` of the `C̄` string.
    pub m: Cplx,
    /// Gauge index `m̄` of the nested reference state.
    pub mbar: Cplx,
    pub n_excitations: usize,
}

impl GaugeParams {
    pub fn theta_p_frame(&self) -> Cplx {
        self.theta_p + self.eta
    }
}

/// Drops signed zeros so that principal branches are taken on the upper
/// side of their cuts.
fn unsigned(z: Cplx) -> Cplx {
    Cplx::new(z.re + 0.0, z.im + 0.0)
}

/// The two branches `w` and `iπ − w` of `asinh`.
fn asinh_branches(z: Cplx) -> [Cplx; 2] {
    let w = unsigned(z).asinh();
    [w, I * PI - w]
}

/// Shifts `(a, b)` jointly by multiples of `iπ` so that `Im a ∈ (−π/2, π/2]`.
/// Every quantity built from `(a, b)` is invariant under the joint shift.
fn reduce_pair(a: Cplx, b: Cplx) -> (Cplx, Cplx) {
    let k = ((a.im + PI / 2.0) / PI).ceil() - 1.0;
    let s = I * (k * PI);
    (a - s, b - s)
}

/// `K̃⁻(λ)` for generic `(α, β, θ, p)`.
fn k_tilde_generic(lambda: Cplx, a: Cplx, b: Cplx, theta: Cplx, p: Cplx) -> CMat {
    let d1 = a.sinh() * b.cosh() * lambda.cosh();
    let d2 = a.cosh() * b.sinh() * lambda.sinh();
    let sh = (2.0 * lambda).sinh();
    let f = 1.0 / (2.0 * p);
    CMat::from_rows([
        [f * 2.0 * (d1 + d2), f * theta.exp() * sh],
        [f * (-theta).exp() * sh, f * 2.0 * (d1 - d2)],
    ])
}

pub fn k_tilde_minus(lambda: Cplx, g: &GaugeParams) -> CMat {
    k_tilde_generic(lambda, g.alpha_m, g.beta_m, g.theta_m, g.p)
}

/// `K̃⁺(λ) = K̃⁻(−λ−η)` with `(α₋, β₋, θ₋, p) → (−α₊, −β₊, θ₊, q)`.
pub fn k_tilde_plus(lambda: Cplx, g: &GaugeParams) -> CMat {
    k_tilde_generic(-lambda - g.eta, -g.alpha_p, -g.beta_p, g.theta_p, g.q)
}

/// `σ(η) K̃⁺(λ) σ(−η)`: the plus boundary as it enters the gauge-frame trace.
pub fn k_tilde_plus_frame(lambda: Cplx, g: &GaugeParams) -> CMat {
    k_tilde_generic(-lambda - g.eta, -g.alpha_p, -g.beta_p, g.theta_p_frame(), g.q)
}

/// Largest relative mismatch of the σ-dressed reconstructions
/// `K̄⁻(λ−η/2) = σ(λ) K̃⁻(λ) σ(λ)` and `K̄⁺(λ−η/2) = σ(η−λ) K̃⁺(λ) σ(−λ−η)`
/// over the given points.
pub fn reconstruction_residual(params: &ModelParams, g: &GaugeParams, lambdas: &[Cplx]) -> f64 {
    let eta = params.eta;
    lambdas
        .iter()
        .map(|&l| {
            let sm = sigma(l);
            let minus = &(&sm * &k_tilde_minus(l, g)) * &sm;
            let plus = &(&sigma(eta - l) * &k_tilde_plus(l, g)) * &sigma(-l - eta);
            let rm = rel_diff(&k_bar_minus(l - eta / 2.0, params), &minus);
            let rp = rel_diff(&k_bar_plus(l - eta / 2.0, params), &plus);
            rm.max(rp)
        })
        .fold(0.0, f64::max)
}

/// Fixed probe points for branch validation.
pub fn reconstruction_grid() -> Vec<Cplx> {
    (0..20)
        .map(|k| {
            let t = k as f64;
            Cplx::new(-0.9 + 0.093 * t, 0.35 * (0.7 * t).sin())
        })
        .collect()
}

const BRANCH_TOL: f64 = 1e-10;

/// Derives the gauge-frame parameters for an `M`-excitation sector.
///
/// `p` and `q` are square roots of `1/(4 c1 c2)` and `1/(4 c1' c2')`; the
/// sums and differences `α ± β` follow from
/// `sinh(α₋+β₋) = −p e^{−ζ}`, `sinh(α₋−β₋) = p(e^{ζ+η} − 2c sinh η)`,
/// `sinh(α₊+β₊) = q e^{−ζ'}`, `sinh(α₊−β₊) = −q e^{ζ'}`.
/// All sign and `asinh` branch combinations are enumerated (principal
/// roots first) and validated by reconstruction; among the valid ones the
/// representative with the smallest `|Im α|` and then the largest `Re α` on
/// each side is kept, earliest in enumeration order on ties.
pub fn gauge_params(params: &ModelParams, n_excitations: usize) -> Result<GaugeParams> {
    let eta = params.eta;
    let (mi, pl) = (&params.minus, &params.plus);
    if mi.c1 * mi.c2 == ZERO || pl.c1 * pl.c2 == ZERO {
        return Err(Error::InvalidParams("c1 c2 and c1' c2' must be nonzero".into()));
    }
    if eta.sinh() == ZERO {
        return Err(Error::InvalidParams("sinh η must be nonzero".into()));
    }
    let p0 = unsigned(ONE / (4.0 * mi.c1 * mi.c2)).sqrt();
    let q0 = unsigned(ONE / (4.0 * pl.c1 * pl.c2)).sqrt();
    let grid = reconstruction_grid();
    let score = |a: Cplx| (a.im.abs(), -a.re);
    let better = |a: (f64, f64), b: (f64, f64)| {
        const T: f64 = 1e-9;
        if (a.0 - b.0).abs() > T {
            a.0 < b.0
        } else {
            a.1 < b.1 - T
        }
    };

    let mut best: Option<(GaugeParams, (f64, f64), (f64, f64))> = None;
    let mut best_residual = f64::INFINITY;
    for ps in [ONE, -ONE] {
        for qs in [ONE, -ONE] {
            let p = ps * p0;
            let q = qs * q0;
            let theta_m = unsigned(2.0 * p * mi.c1).ln();
            let theta_p = unsigned(2.0 * q * pl.c1).ln();
            let sm_sum = -p * (-mi.zeta).exp();
            let sm_dif = p * ((mi.zeta + eta).exp() - 2.0 * mi.c * eta.sinh());
            let sp_sum = q * (-pl.zeta).exp();
            let sp_dif = -q * pl.zeta.exp();
            for wm1 in asinh_branches(sm_sum) {
                for wm2 in asinh_branches(sm_dif) {
                    for wp1 in asinh_branches(sp_sum) {
                        for wp2 in asinh_branches(sp_dif) {
                            let (am, bm) = reduce_pair((wm1 + wm2) / 2.0, (wm1 - wm2) / 2.0);
                            let (ap, bp) = reduce_pair((wp1 + wp2) / 2.0, (wp1 - wp2) / 2.0);
                            let g = assemble(params, n_excitations, [am, bm, ap, bp], theta_m, theta_p, p, q);
                            let r = reconstruction_residual(params, &g, &grid);
                            if !r.is_finite() {
                                continue;
                            }
                            best_residual = best_residual.min(r);
                            if r > BRANCH_TOL {
                                continue;
                            }
                            let (sm, sp) = (score(am), score(ap));
                            let take = match &best {
                                None => true,
                                Some((_, bsm, bsp)) => {
                                    better(sm, *bsm) || (!better(*bsm, sm) && better(sp, *bsp))
                                }
                            };
                            if take {
                                best = Some((g, sm, sp));
                            }
                        }
                    }
                }
            }
        }
    }
    best.map(|(g, _, _)| g).ok_or(Error::GaugeBranch { best: best_residual })
}

fn assemble(
    params: &ModelParams,
    n_excitations: usize,
    [am, bm, ap, bp]: [Cplx; 4],
    theta_m: Cplx,
    theta_p: Cplx,
    p: Cplx,
    q: Cplx,
) -> GaugeParams {
    let eta = params.eta;
    let s = &params.minus;
    let half_pi = I * (PI / 2.0);
    let a0 = (s.zeta + eta).exp() - 2.0 * s.c * eta.sinh();
    let xi1 = p * (a0 - (-s.zeta).exp());
    let xi2 = p * (-a0 - (-s.zeta).exp());
    let alpha_eta = -(theta_p + eta) + eta + half_pi;
    let m_eta = ap + bp - half_pi;
    let mbar_eta = -theta_m - alpha_eta + am + bm + 2.0 * half_pi - (n_excitations as f64) * eta;
    GaugeParams {
        eta,
        alpha_m: am,
        beta_m: bm,
        alpha_p: ap,
        beta_p: bp,
        theta_m,
        theta_p,
        p,
        q,
        xi1,
        xi2,
        alpha: alpha_eta / eta,
        m: m_eta / eta,
        mbar: mbar_eta / eta,
        n_excitations,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::re;
    use crate::tables::table_params;

    fn c(a: f64, b: f64) -> Cplx {
        Cplx::new(a, b)
    }

    #[test]
    fn c2_examples() {
        let c2 = c2_from_constraint(ONE, re(0.1), re(-0.3)).unwrap();
        let oracle = (1.0 - 0.1f64.exp()) / -0.3;
        assert!((c2 - re(oracle)).norm() < 1e-15);
        assert!((c2.re - 0.3505697).abs() < 1e-7);
        let c2p = c2_from_constraint(re(-0.3), re(-0.4), re(-0.7)).unwrap();
        assert!((c2p.re - (0.09 + 0.3 * (-0.4f64).exp()) / -0.7).abs() < 1e-15);
        assert!((c2p.re + 0.415851448).abs() < 1e-9);
        assert_eq!(c2_from_constraint(ZERO, c(0.3, 0.2), ONE).unwrap(), ZERO);
        assert!(c2_from_constraint(ONE, ONE, ZERO).is_err());
    }

    #[test]
    fn k_minus_values() {
        let p = table_params(2);
        let k0 = k_minus(ZERO, &p);
        assert!(rel_diff(&CMat::identity(3).scale(p.minus.zeta.sinh()), &k0) < 1e-15);
        let k = k_minus(re(0.3), &p);
        assert!((k[(1, 2)] - p.minus.c1 * re(0.6).sinh()).norm() < 1e-15);
    }

    #[test]
    fn k_plus_values() {
        let p = table_params(2);
        let eta = p.eta;
        let kp = k_plus(-1.5 * eta, &p);
        assert!(rel_diff(&crossing_m(eta).scale(p.plus.zeta.sinh()), &kp) < 1e-15);
        let u = c(0.21, -0.13);
        let e4 = (4.0 * eta).exp();
        let expect = e4 * (-u - 1.5 * eta).exp() * (p.plus.zeta + u + 1.5 * eta).sinh()
            + p.plus.c * e4 * (-2.0 * u - 3.0 * eta).exp() * (-2.0 * u - 3.0 * eta).sinh();
        assert!((k_plus(u, &p)[(0, 0)] - expect).norm() < 1e-14);
    }

    #[test]
    fn k_derivatives_match_finite_differences() {
        let p = table_params(2);
        let u = c(0.11, 0.27);
        let h = 1e-6;
        let fd = |f: &dyn Fn(Cplx) -> CMat| (&f(u + h) - &f(u - h)).scale(re(0.5 / h));
        assert!(rel_diff(&k_minus_deriv(u, &p), &fd(&|x| k_minus(x, &p))) < 1e-9);
        assert!(rel_diff(&k_plus_deriv(u, &p), &fd(&|x| k_plus(x, &p))) < 1e-9);
    }

    #[test]
    fn nested_boundaries_two_forms_agree() {
        let p = table_params(2);
        for k in 0..10 {
            let u = c(-0.4 + 0.09 * k as f64, 0.3 - 0.05 * k as f64);
            assert!(rel_diff(&k_bar_minus(u, &p), &k_bar_minus_extracted(u, &p)) < 1e-12);
            assert!(rel_diff(&k_bar_plus(u, &p), &k_bar_plus_extracted(u, &p)) < 1e-12);
        }
        let u = c(0.3, 0.1);
        assert_eq!(k_bar_minus(u, &p)[(0, 1)], p.minus.c1 * (2.0 * u + p.eta).sinh());
        let kp = k_bar_plus(u, &p);
        assert!((kp[(0, 0)] - (-(u + p.eta / 2.0)).exp() * (p.plus.zeta + 1.5 * p.eta + u).sinh()).norm() < 1e-15);
    }

    #[test]
    fn reflection_equations() {
        let p = table_params(2);
        let (u1, u2) = (c(0.3, 0.1), c(-0.2, 0.4));
        assert!(check_re(u1, u2, &p) <= 1e-12);
        assert!(check_re(u1, u1, &p) <= 1e-13);
        assert!(check_dual_re(u1, u2, &p) <= 1e-12);
        assert!(check_nested_re(u1, u2, &p) <= 1e-12);
    }

    #[test]
    fn broken_constraint_breaks_re() {
        let mut p = table_params(2);
        p.minus.c2 += re(1e-3);
        assert!(check_re(c(0.3, 0.1), c(-0.2, 0.4), &p) > 1e-6);
    }

    #[test]
    fn gauge_caption_values() {
        let p = table_params(2);
        let g = gauge_params(&p, 0).unwrap();
        let close = |x: Cplx, a: f64, b: f64| (x - c(a, b)).norm() < 6e-5;
        assert!(close(g.alpha_m, 0.8940, 0.0), "{:?}", g.alpha_m);
        assert!(close(g.alpha_p, 0.2704, 0.0), "{:?}", g.alpha_p);
        assert!(close(g.beta_m, -0.0321, -1.5708), "{:?}", g);
        assert!(close(g.beta_p, 0.8573, 0.0), "{:?}", g.beta_p);
        assert!(close(g.theta_m, -0.0779, -1.5708));
        assert!(close(g.theta_p, 0.2604, 3.1416));
        assert!(close(g.p, 0.0, 1.5418));
        assert!(close(g.q, 0.9267, 0.0));
    }

    #[test]
    fn gauge_invariants() {
        let p = table_params(2);
        for m in 0..3 {
            let g = gauge_params(&p, m).unwrap();
            let (mi, pl) = (&p.minus, &p.plus);
            assert!((g.theta_m.exp() - 2.0 * g.p * mi.c1).norm() < 1e-12);
            assert!((g.theta_p.exp() - 2.0 * g.q * pl.c1).norm() < 1e-12);
            assert!((4.0 * g.p * g.p * mi.c1 * mi.c2 - ONE).norm() < 1e-12);
            assert!((4.0 * g.q * g.q * pl.c1 * pl.c2 - ONE).norm() < 1e-12);
            let hp = I * (PI / 2.0);
            let eta = p.eta;
            assert!((g.alpha * eta - (-g.theta_p_frame() + eta + hp)).norm() < 1e-12);
            assert!((g.m * eta - (g.alpha_p + g.beta_p - hp)).norm() < 1e-12);
            let rhs = -g.theta_m - g.alpha * eta + g.alpha_m + g.beta_m + 2.0 * hp;
            assert!(((g.mbar + m as f64) * eta - rhs).norm() < 1e-12);
            assert!(reconstruction_residual(&p, &g, &reconstruction_grid()) <= 1e-10);
        }
    }

    #[test]
    fn gauge_matches_squared_parameterization() {
        let p = table_params(2);
        let g = gauge_params(&p, 0).unwrap();
        let (x1, x2) = (g.xi1 * g.xi1, g.xi2 * g.xi2);
        let a = (4.0 + x2 - x1) / 4.0;
        let b = (4.0 + x1 - x2) / 4.0;
        let s2am = (-a + (a * a + x1).sqrt()) / 2.0;
        let s2bm = (-b + (b * b + x2).sqrt()) / 2.0;
        assert!((g.alpha_m.sinh().powi(2) - s2am).norm() < 1e-12);
        assert!((g.beta_m.sinh().powi(2) - s2bm).norm() < 1e-12);
        let q2 = g.q * g.q;
        let zp = p.plus.zeta;
        let s2bp = -(1.0 - q2) / 2.0 + ((1.0 - q2).powi(2) / 4.0 + q2 * zp.cosh().powi(2)).sqrt();
        let s2ap = q2 * zp.sinh().powi(2) / (1.0 + s2bp);
        assert!((g.beta_p.sinh().powi(2) - s2bp).norm() < 1e-12);
        assert!((g.alpha_p.sinh().powi(2) - s2ap).norm() < 1e-12);
    }

    #[test]
    fn k_tilde_at_origin_has_no_off_diagonal() {
        let g = gauge_params(&table_params(2), 0).unwrap();
        assert_eq!(k_tilde_minus(ZERO, &g)[(0, 1)], ZERO);
    }

    #[test]
    fn frame_twist_is_sigma_conjugation() {
        let g = gauge_params(&table_params(2), 0).unwrap();
        let l = c(0.23, -0.31);
        let twisted = &(&sigma(g.eta) * &k_tilde_plus(l, &g)) * &sigma(-g.eta);
        assert!(rel_diff(&twisted, &k_tilde_plus_frame(l, &g)) < 1e-14);
    }
}

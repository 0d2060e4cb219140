//! The nested spin-1/2 open chain of length `M`: its transfer matrix in the
//! `r`/`K̄` form and in the σ-conjugated gauge form, the gauge vectors and
//! the gauge-sandwiched operators `C̄`, `Ā`, `D̄`, and the nested Bethe state.
//!
//! Nested operators act on `(C²)^{⊗M}` with nested site 1 slowest. With the
//! auxiliary space explicit it is the leading factor.

use crate::bae::BetheRoots;
use crate::boundary::{k_bar_minus, k_bar_plus, k_tilde_minus, k_tilde_plus_frame, GaugeParams, ModelParams};
use crate::error::{Error, Result};
use crate::linalg::{embed_pair, kron, kron_all, kron_vec, rel_diff, vnorm, CMat, Cplx, SpaceShape, ONE};
use crate::rmatrix::{r4, r4_sym, sigma};

/// Smallest admissible `|sinh|` in a normalization denominator.
pub const GAUGE_POLE_TOL: f64 = 1e-12;

fn nonzero(z: Cplx, what: &str) -> Result<Cplx> {
    if z.norm() < GAUGE_POLE_TOL || !z.is_finite() {
        return Err(Error::PoleSet(format!("{what} = {z} in a gauge-vector normalization")));
    }
    Ok(z)
}

/// `Xₘ(λ) = (e^{−[λ+(α+m)η]}, 1)`.
pub fn x_vec(m: Cplx, lambda: Cplx, g: &GaugeParams) -> [Cplx; 2] {
    [(-(lambda + (g.alpha + m) * g.eta)).exp(), ONE]
}

/// `Yₘ(λ) = (e^{−[λ+(α−m)η]}, 1)`.
pub fn y_vec(m: Cplx, lambda: Cplx, g: &GaugeParams) -> [Cplx; 2] {
    [(-(lambda + (g.alpha - m) * g.eta)).exp(), ONE]
}

fn bar_norm(m: Cplx, lambda: Cplx, g: &GaugeParams) -> Result<Cplx> {
    Ok((lambda + g.alpha * g.eta).exp() / (2.0 * nonzero((m * g.eta).sinh(), "sinh(mη)")?))
}

/// `X̄ₘ(λ) = e^{λ+αη}/(2 sinh mη) · (1, −e^{−[λ+(α+m)η]})`.
pub fn xbar_vec(m: Cplx, lambda: Cplx, g: &GaugeParams) -> Result<[Cplx; 2]> {
    let n = bar_norm(m, lambda, g)?;
    Ok([n, -n * x_vec(m, lambda, g)[0]])
}

/// `Ȳₘ(λ) = e^{λ+αη}/(2 sinh mη) · (−1, e^{−[λ+(α−m)η]})`.
pub fn ybar_vec(m: Cplx, lambda: Cplx, g: &GaugeParams) -> Result<[Cplx; 2]> {
    let n = bar_norm(m, lambda, g)?;
    Ok([-n, n * y_vec(m, lambda, g)[0]])
}

/// `X̂ₘ(λ) = e^{−η} sinh((m+2)η)/sinh((m+1)η) · Xₘ(λ)`.
pub fn xhat_vec(m: Cplx, lambda: Cplx, g: &GaugeParams) -> Result<[Cplx; 2]> {
    let eta = g.eta;
    let f = (-eta).exp() * ((m + 2.0) * eta).sinh() / nonzero(((m + 1.0) * eta).sinh(), "sinh((m+1)η)")?;
    let x = x_vec(m, lambda, g);
    Ok([f * x[0], f * x[1]])
}

/// `Ŷₘ(λ) = e^{−η} sinh((m−2)η)/sinh((m−1)η) · Yₘ(λ)`, the normalization
/// with `X̄ₘ(−λ)·Ŷₘ₊₂(−λ) = 1`, mirroring `Ȳₘ(−λ)·X̂ₘ₋₂(−λ) = 1`.
pub fn yhat_vec(m: Cplx, lambda: Cplx, g: &GaugeParams) -> Result<[Cplx; 2]> {
    let eta = g.eta;
    let f = (-eta).exp() * ((m - 2.0) * eta).sinh() / nonzero(((m - 1.0) * eta).sinh(), "sinh((m−1)η)")?;
    let y = y_vec(m, lambda, g);
    Ok([f * y[0], f * y[1]])
}

/// All gauge vectors at one gauge index and argument.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GaugeVectors {
    pub x: [Cplx; 2],
    pub y: [Cplx; 2],
    pub xbar: [Cplx; 2],
    pub ybar: [Cplx; 2],
    pub xhat: [Cplx; 2],
    pub yhat: [Cplx; 2],
}

pub fn gauge_vectors(m: Cplx, lambda: Cplx, g: &GaugeParams) -> Result<GaugeVectors> {
    Ok(GaugeVectors {
        x: x_vec(m, lambda, g),
        y: y_vec(m, lambda, g),
        xbar: xbar_vec(m, lambda, g)?,
        ybar: ybar_vec(m, lambda, g)?,
        xhat: xhat_vec(m, lambda, g)?,
        yhat: yhat_vec(m, lambda, g)?,
    })
}

fn dot2(a: &[Cplx; 2], b: &[Cplx; 2]) -> Cplx {
    a[0] * b[0] + a[1] * b[1]
}

fn outer2(v: &[Cplx; 2], w: &[Cplx; 2]) -> CMat {
    CMat::from_rows([[v[0] * w[0], v[0] * w[1]], [v[1] * w[0], v[1] * w[1]]])
}

/// Deviations of the gauge vectors from their duality relations.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GaugeIdentityResiduals {
    /// Largest of `|X̄ₘ·Yₘ − 1|`, `|Ȳₘ·Xₘ − 1|`, `|X̄ₘ·Xₘ|`, `|Ȳₘ·Yₘ|` at `λ`.
    pub biorthogonality: f64,
    /// `‖Xₘ(λ)Ȳₘ(λ) + Yₘ(λ)X̄ₘ(λ) − Id₂‖`.
    pub resolution: f64,
    /// Largest of `|Ȳₘ(−λ)·X̂ₘ₋₂(−λ) − 1|` and `|X̄ₘ(−λ)·Ŷₘ₊₂(−λ) − 1|`.
    pub hat_duality: f64,
}

pub fn gauge_identity_residuals(m: Cplx, lambda: Cplx, g: &GaugeParams) -> Result<GaugeIdentityResiduals> {
    let v = gauge_vectors(m, lambda, g)?;
    let biorthogonality = [
        (dot2(&v.xbar, &v.y) - ONE).norm(),
        (dot2(&v.ybar, &v.x) - ONE).norm(),
        dot2(&v.xbar, &v.x).norm(),
        dot2(&v.ybar, &v.y).norm(),
    ]
    .into_iter()
    .fold(0.0, f64::max);
    let sum = &outer2(&v.x, &v.ybar) + &outer2(&v.y, &v.xbar);
    let resolution = (&sum - &CMat::identity(2)).norm();
    let a = dot2(&ybar_vec(m, -lambda, g)?, &xhat_vec(m - 2.0, -lambda, g)?);
    let d = dot2(&xbar_vec(m, -lambda, g)?, &yhat_vec(m + 2.0, -lambda, g)?);
    let hat_duality = (a - ONE).norm().max((d - ONE).norm());
    Ok(GaugeIdentityResiduals { biorthogonality, resolution, hat_duality })
}

fn site_product(factors: impl Iterator<Item = CMat>, dim: usize) -> CMat {
    factors.fold(CMat::identity(dim), |acc, f| &acc * &f)
}

/// `K̄⁺₀ Π_{j=M..1} r_{0j}(u+u_j+η) K̄⁻₀ Π_{j=1..M} r_{j0}(u−u_j)` before the trace.
fn form_a_product(u: Cplx, us: &[Cplx], params: &ModelParams) -> CMat {
    let eta = params.eta;
    let m = us.len();
    let shape = SpaceShape::uniform(2, m + 1);
    let dim = shape.dim();
    let rest = CMat::identity(dim / 2);
    let left = site_product((1..=m).rev().map(|j| embed_pair(&r4(u + us[j - 1] + eta, eta), 0, j, &shape).expect("valid site")), dim);
    let right = site_product((1..=m).map(|j| embed_pair(&r4(u - us[j - 1], eta), j, 0, &shape).expect("valid site")), dim);
    let kp = kron(&k_bar_plus(u, params), &rest);
    let km = kron(&k_bar_minus(u, params), &rest);
    &(&(&kp * &left) * &km) * &right
}

/// Gauge-frame double row `T̃(λ) K̃⁻(λ) T̂̃(λ)` on `C² ⊗ (C²)^{⊗M}`, auxiliary first.
pub fn gauge_double_row(lambda: Cplx, lambdas: &[Cplx], g: &GaugeParams) -> CMat {
    let eta = g.eta;
    let m = lambdas.len();
    let shape = SpaceShape::uniform(2, m + 1);
    let dim = shape.dim();
    let left = site_product(
        (1..=m).rev().map(|j| embed_pair(&r4_sym(lambda + lambdas[j - 1], eta), 0, j, &shape).expect("valid site")),
        dim,
    );
    let right = site_product(
        (1..=m).map(|j| embed_pair(&r4_sym(lambda - lambdas[j - 1], eta), j, 0, &shape).expect("valid site")),
        dim,
    );
    let km = kron(&k_tilde_minus(lambda, g), &CMat::identity(dim / 2));
    &(&left * &km) * &right
}

/// `⊗ⱼ σ(s·λⱼ)` on the nested sites.
fn sigma_string(lambdas: &[Cplx], s: f64) -> CMat {
    kron_all(&lambdas.iter().map(|&l| sigma(s * l)).collect::<Vec<_>>())
}

fn check_pole(z: Cplx, what: &str) -> Result<Cplx> {
    if z.norm() < crate::tq::POLE_TOL || !z.is_finite() {
        return Err(Error::PoleSet(format!("{what} = {z}")));
    }
    Ok(z)
}

/// The nested transfer matrix in both forms, evaluated at the same point.
#[derive(Clone, Debug)]
pub struct NestedTransfer {
    /// `r`/`K̄` form at `u = λ − η/2` with the level-1 roots `u_j`.
    pub form_a: CMat,
    /// σ-conjugated `R̃`/`K̃` form at `λ` with `λ_j = u_j + η/2`.
    pub form_b: CMat,
}

/// `t̂` in the `r`/`K̄` form at `u` with level-1 roots `us`.
pub fn nested_transfer_a(u: Cplx, us: &[Cplx], params: &ModelParams) -> Result<CMat> {
    let eta = params.eta;
    let pref = eta.exp() * (2.0 * u).sinh() / check_pole((2.0 * u + eta).sinh(), "sinh(2u+η)")?;
    Ok(form_a_product(u, us, params).trace_first(2).scale(pref))
}

/// `t̂` in the gauge form at `λ` with `λ_j = u_j + η/2`.
pub fn nested_transfer_b(lambda: Cplx, lambdas: &[Cplx], g: &GaugeParams) -> Result<CMat> {
    let eta = g.eta;
    let pref = eta.exp() * (2.0 * lambda - eta).sinh() / check_pole((2.0 * lambda).sinh(), "sinh(2λ)")?;
    let dim = 1usize << lambdas.len();
    let kp = kron(&k_tilde_plus_frame(lambda, g), &CMat::identity(dim));
    let inner = (&kp * &gauge_double_row(lambda, lambdas, g)).trace_first(2);
    let conj = &(&sigma_string(lambdas, -1.0) * &inner) * &sigma_string(lambdas, 1.0);
    Ok(conj.scale(pref))
}

pub fn nested_transfer(lambda: Cplx, roots: &BetheRoots, params: &ModelParams, g: &GaugeParams) -> Result<NestedTransfer> {
    if roots.m() == 0 {
        return Err(Error::InvalidParams("the nested chain needs M ≥ 1".into()));
    }
    let eta = params.eta;
    let form_a = nested_transfer_a(lambda - eta / 2.0, &roots.u_roots, params)?;
    let form_b = nested_transfer_b(lambda, &roots.lambdas(eta), g)?;
    Ok(NestedTransfer { form_a, form_b })
}

/// `Σ_{ab} l_a T_{ab} r_b` over the auxiliary indices of a gauge double row.
fn sandwich(left: &[Cplx; 2], t: &CMat, right: &[Cplx; 2]) -> CMat {
    let mut out = CMat::zeros(t.rows() / 2, t.cols() / 2);
    for a in 0..2 {
        for b in 0..2 {
            out = &out + &t.block(2, a, b).scale(left[a] * right[b]);
        }
    }
    out
}

/// `C̄ₘ(λ) = X̄ₘ(λ) T̃(λ) X̂ₘ(−λ)`.
pub fn cbar(m: Cplx, lambda: Cplx, lambdas: &[Cplx], g: &GaugeParams) -> Result<CMat> {
    let t = gauge_double_row(lambda, lambdas, g);
    Ok(sandwich(&xbar_vec(m, lambda, g)?, &t, &xhat_vec(m, -lambda, g)?))
}

/// `Āₘ(λ) = Ȳₘ(λ) T̃(λ) X̂ₘ₋₂(−λ)`.
pub fn abar(m: Cplx, lambda: Cplx, lambdas: &[Cplx], g: &GaugeParams) -> Result<CMat> {
    let t = gauge_double_row(lambda, lambdas, g);
    Ok(sandwich(&ybar_vec(m, lambda, g)?, &t, &xhat_vec(m - 2.0, -lambda, g)?))
}

/// `D̄ₘ(λ) = X̄ₘ(λ) T̃(λ) Ŷₘ₊₂(−λ)`.
pub fn dbar(m: Cplx, lambda: Cplx, lambdas: &[Cplx], g: &GaugeParams) -> Result<CMat> {
    let t = gauge_double_row(lambda, lambdas, g);
    Ok(sandwich(&xbar_vec(m, lambda, g)?, &t, &yhat_vec(m + 2.0, -lambda, g)?))
}

/// `t̂(λ)` rebuilt from `Āₘ` and `D̄ₘ` at the starting index `m` of the gauge:
/// the prefactor and σ-conjugation of the gauge form applied to
/// `Ȳₘ(−λ)K̃⁺(λ)Xₘ(λ)·Āₘ(λ) + X̄ₘ(−λ)K̃⁺(λ)Yₘ(λ)·D̄ₘ(λ)`.
pub fn decomposed_transfer(lambda: Cplx, lambdas: &[Cplx], g: &GaugeParams) -> Result<CMat> {
    let eta = g.eta;
    let m = g.m;
    let kp = k_tilde_plus_frame(lambda, g);
    let apply = |v: [Cplx; 2]| [kp[(0, 0)] * v[0] + kp[(0, 1)] * v[1], kp[(1, 0)] * v[0] + kp[(1, 1)] * v[1]];
    let c1 = dot2(&ybar_vec(m, -lambda, g)?, &apply(x_vec(m, lambda, g)));
    let c2 = dot2(&xbar_vec(m, -lambda, g)?, &apply(y_vec(m, lambda, g)));
    let inner = &abar(m, lambda, lambdas, g)?.scale(c1) + &dbar(m, lambda, lambdas, g)?.scale(c2);
    let pref = eta.exp() * (2.0 * lambda - eta).sinh() / check_pole((2.0 * lambda).sinh(), "sinh(2λ)")?;
    let conj = &(&sigma_string(lambdas, -1.0) * &inner) * &sigma_string(lambdas, 1.0);
    Ok(conj.scale(pref))
}

/// Relative residuals of the two exchange relations
/// `D̄ₘ₋₂(u₂)C̄ₘ₋₂(u₁)` and `Āₘ(u₂)C̄ₘ(u₁)` at gauge index `m`.
pub fn nested_commutation_residuals(u1: Cplx, u2: Cplx, m: Cplx, lambdas: &[Cplx], g: &GaugeParams) -> Result<[f64; 2]> {
    let eta = g.eta;
    let s = |x: Cplx| x.sinh();
    for (z, what) in [
        (s(u1 - u2), "sinh(u₁−u₂)"),
        (s(u1 + u2), "sinh(u₁+u₂)"),
        (s(u1 + u2 + eta), "sinh(u₁+u₂+η)"),
        (s(u1 - u2 + eta), "sinh(u₁−u₂+η)"),
        (s(m * eta), "sinh(mη)"),
    ] {
        check_pole(z, what)?;
    }
    let me = m * eta;
    let (c, a, d) = (
        |k: Cplx, x: Cplx| cbar(k, x, lambdas, g),
        |k: Cplx, x: Cplx| abar(k, x, lambdas, g),
        |k: Cplx, x: Cplx| dbar(k, x, lambdas, g),
    );
    let lhs1 = &d(m - 2.0, u2)? * &c(m - 2.0, u1)?;
    let k1 = s(u1 - u2 + eta) * s(u1 + u2) / (s(u1 + u2 + eta) * s(u1 - u2));
    let k2 = s(me - u1 + u2) * s(u1 + u2) * s(eta) / (s(me) * s(u1 - u2) * s(u1 + u2 + eta));
    let k3 = s(me + u1 + u2) * s(eta) / (s(me) * s(u1 + u2 + eta));
    let rhs1 = &(&(&c(m - 2.0, u1)? * &d(m, u2)?).scale(k1) - &(&c(m - 2.0, u2)? * &d(m, u1)?).scale(k2))
        - &(&c(m - 2.0, u2)? * &a(m, u1)?).scale(k3);

    let lhs2 = &a(m, u2)? * &c(m, u1)?;
    let j1 = s(u1 - u2) * s(u1 + u2 + eta) / (s(u1 + u2) * s(u1 - u2 + eta));
    let j2 = s(eta) * s(u1 - u2) * s(me - u2 - u1) / (s(me) * s(u1 + u2) * s(u1 - u2 + eta));
    let j3 = s(me + u1 - u2) * s(eta) / (s(u1 - u2 + eta) * s(me));
    let rhs2 = &(&(&c(m, u1)? * &a(m + 2.0, u2)?).scale(j1) + &(&d(m, u1)? * &c(m, u2)?).scale(j2))
        + &(&a(m, u1)? * &c(m, u2)?).scale(j3);
    Ok([rel_diff(&lhs1, &rhs1), rel_diff(&lhs2, &rhs2)])
}

/// `|m̄⟩ = ⊗ₙ (e^{−[−λₙ+(m̄+M−n+1+α)η]}, 1)` over nested sites `n = 1..M`.
pub fn nested_reference(mbar: Cplx, lambdas: &[Cplx], g: &GaugeParams) -> Vec<Cplx> {
    let m = lambdas.len();
    lambdas.iter().enumerate().fold(vec![ONE], |acc, (k, &l)| {
        let n = (k + 1) as f64;
        let up = (-(-l + (mbar + (m as f64) - n + 1.0 + g.alpha) * g.eta)).exp();
        kron_vec(&acc, &[up, ONE])
    })
}

/// Nested Bethe state, components `F^{a₁…a_M}` with `a₁` slowest.
#[derive(Clone, Debug, PartialEq)]
pub struct NestedState {
    pub m_excitations: usize,
    pub vector: Vec<Cplx>,
}

/// Below this norm relative to `‖m̄‖ Π‖C̄‖`, `|F⟩` is reported degenerate.
pub const DEGENERATE_TOL: f64 = 1e-12;

/// `|F⟩ = σ₁(−λ₁)⋯σ_M(−λ_M) C̄ₘ(w₁)C̄ₘ₊₂(w₂)⋯C̄ₘ₊₂₍M₋₁₎(w_M)|m̄⟩`.
///
/// `g` must be the gauge of the `M`-excitation sector, since `m̄` depends on `M`.
pub fn nested_state(roots: &BetheRoots, g: &GaugeParams) -> Result<NestedState> {
    let m = roots.m();
    if m == 0 {
        return Ok(NestedState { m_excitations: 0, vector: vec![ONE] });
    }
    if g.n_excitations != m {
        return Err(Error::InvalidParams(format!(
            "gauge built for {} excitations, roots have {m}",
            g.n_excitations
        )));
    }
    let eta = g.eta;
    let lambdas = roots.lambdas(eta);
    let ws = roots.ws(eta);
    let mut v = nested_reference(g.mbar, &lambdas, g);
    let mut scale = vnorm(&v);
    for j in (1..=m).rev() {
        let op = cbar(g.m + 2.0 * (j - 1) as f64, ws[j - 1], &lambdas, g)?;
        scale *= op.norm();
        v = op.matvec(&v);
    }
    let v = sigma_string(&lambdas, -1.0).matvec(&v);
    let n = vnorm(&v);
    if !v.iter().all(|x| x.is_finite()) {
        return Err(Error::NonFinite("nested state".into()));
    }
    if n <= DEGENERATE_TOL * scale {
        return Err(Error::DegenerateState(format!("|F⟩ vanishes (norm {n:.3e})")));
    }
    Ok(NestedState { m_excitations: m, vector: v })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bae::{newton_refine, NewtonConfig};
    use crate::boundary::gauge_params;
    use crate::linalg::{collinearity_defect, pair};
    use crate::tables::{table1, table3, table_params};
    use crate::tq::lambda_hat;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(a: f64, b: f64) -> Cplx {
        Cplx::new(a, b)
    }

    fn gauge(m: usize) -> (ModelParams, GaugeParams) {
        let p = table_params(2);
        let g = gauge_params(&p, m).unwrap();
        (p, g)
    }

    fn refined_row(k: usize) -> (ModelParams, GaugeParams, BetheRoots) {
        let row = &table1()[k];
        let (p, g) = gauge(row.m());
        let out = newton_refine(&row.roots(p.eta).unwrap(), &p, &g, &NewtonConfig::default()).unwrap();
        assert!(out.is_solution());
        (p, g, out.roots)
    }

    fn rand_c(rng: &mut ChaCha8Rng, r: f64) -> Cplx {
        c(rng.gen_range(-r..r), rng.gen_range(-r..r))
    }

    #[test]
    fn gauge_vector_dualities() {
        let (_, g) = gauge(2);
        let r = gauge_identity_residuals(g.m, c(0.27, -0.11), &g).unwrap();
        assert!(r.biorthogonality < 1e-12 && r.resolution < 1e-12 && r.hat_duality < 1e-12, "{r:?}");
    }

    #[test]
    fn gauge_vector_poles_are_rejected() {
        let (_, g) = gauge(2);
        assert!(matches!(gauge_vectors(c(0.0, 0.0), c(0.1, 0.0), &g), Err(Error::PoleSet(_))));
        assert!(matches!(gauge_vectors(c(-1.0, 0.0), c(0.1, 0.0), &g), Err(Error::PoleSet(_))));
    }

    #[test]
    fn both_forms_agree() {
        let (p, g) = gauge(2);
        let roots = BetheRoots::new(vec![c(0.18, 0.02), c(-0.3, 0.1)], vec![c(0.1, 0.0), c(0.2, 0.0)], p.eta).unwrap();
        for l in [c(0.23, 0.13), c(-0.41, 0.07), c(0.05, -0.3)] {
            let t = nested_transfer(l, &roots, &p, &g).unwrap();
            assert!(rel_diff(&t.form_a, &t.form_b) < 1e-10);
        }
    }

    #[test]
    fn nested_transfer_needs_excitations() {
        let (p, g) = gauge(0);
        assert!(nested_transfer(c(0.1, 0.0), &BetheRoots::empty(), &p, &g).is_err());
    }

    #[test]
    fn nested_transfer_commutes() {
        let (p, g) = gauge(2);
        let roots = BetheRoots::new(vec![c(0.18, 0.02), c(-0.3, 0.1)], vec![c(0.1, 0.0), c(0.2, 0.0)], p.eta).unwrap();
        let a = nested_transfer(c(0.23, 0.13), &roots, &p, &g).unwrap().form_a;
        let b = nested_transfer(c(-0.37, 0.21), &roots, &p, &g).unwrap().form_a;
        assert!(a.commutator(&b).norm() / (a.norm() * b.norm()) < 1e-10);
    }

    #[test]
    fn single_excitation_regression() {
        let (p, g, roots) = refined_row(1);
        assert_eq!(roots.m(), 1);
        let t = nested_transfer(c(0.31, 0.17), &roots, &p, &g).unwrap().form_a;
        let tr = t.trace();
        let det = t[(0, 0)] * t[(1, 1)] - t[(0, 1)] * t[(1, 0)];
        assert!((tr - c(TRACE_ROW2.0, TRACE_ROW2.1)).norm() < 1e-9, "{tr}");
        assert!((det - c(DET_ROW2.0, DET_ROW2.1)).norm() < 1e-9, "{det}");
    }

    const TRACE_ROW2: (f64, f64) = (0.032772416507496085, -0.06475867021980275);
    const DET_ROW2: (f64, f64) = (-0.0006025697389833788, -0.0012528699643400108);

    #[test]
    fn decomposition_reproduces_transfer() {
        let (_, g) = gauge(2);
        let lambdas = [c(0.21, 0.05), c(-0.13, 0.2)];
        for l in [c(0.27, -0.11), c(-0.33, 0.19), c(0.12, 0.4)] {
            let tb = nested_transfer_b(l, &lambdas, &g).unwrap();
            let dec = decomposed_transfer(l, &lambdas, &g).unwrap();
            assert!(rel_diff(&tb, &dec) < 1e-10);
        }
    }

    #[test]
    fn exchange_relations() {
        let (_, g) = gauge(2);
        let lambdas = [c(0.21, 0.05), c(-0.13, 0.2)];
        let r = nested_commutation_residuals(c(0.31, 0.07), c(-0.12, 0.18), g.m, &lambdas, &g).unwrap();
        assert!(r[0] < 1e-9 && r[1] < 1e-9, "{r:?}");
        assert!(nested_commutation_residuals(c(0.2, 0.0), c(0.2, 0.0), g.m, &lambdas, &g).is_err());
    }

    #[test]
    fn reference_is_a_product_state() {
        let (_, g) = gauge(2);
        let l = [c(0.21, 0.05), c(-0.13, 0.2)];
        let one = nested_reference(g.mbar, &l[..1], &g);
        let up = (-(-l[0] + (g.mbar + 1.0 + g.alpha) * g.eta)).exp();
        assert_eq!(one, vec![up, ONE]);
        let two = nested_reference(g.mbar, &l, &g);
        let f1 = [(-(-l[0] + (g.mbar + 2.0 + g.alpha) * g.eta)).exp(), ONE];
        let f2 = [(-(-l[1] + (g.mbar + 1.0 + g.alpha) * g.eta)).exp(), ONE];
        let k = kron_vec(&f1, &f2);
        assert!(two.iter().zip(&k).all(|(a, b)| (a - b).norm() < 1e-14 && a.norm() > 0.0));
    }

    #[test]
    fn empty_nested_state_is_scalar_one() {
        let (_, g) = gauge(0);
        assert_eq!(nested_state(&BetheRoots::empty(), &g).unwrap().vector, vec![ONE]);
    }

    #[test]
    fn sector_mismatch_is_rejected() {
        let (_, g) = gauge(2);
        let roots = BetheRoots::new(vec![c(0.1, 0.0)], vec![c(0.2, 0.0)], g.eta).unwrap();
        assert!(matches!(nested_state(&roots, &g), Err(Error::InvalidParams(_))));
    }

    #[test]
    fn nested_state_is_an_eigenvector() {
        let (p, g, roots) = refined_row(0);
        let f = nested_state(&roots, &g).unwrap().vector;
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..10 {
            let l = rand_c(&mut rng, 0.6);
            let t = nested_transfer(l, &roots, &p, &g).unwrap().form_a;
            let lam = lambda_hat(l, &roots, &g).unwrap();
            let tf = t.matvec(&f);
            let r: f64 = tf.iter().zip(&f).map(|(a, b)| (a - lam * b).norm_sqr()).sum::<f64>().sqrt();
            assert!(r / vnorm(&f) < 1e-9, "λ = {l}: {r}");
        }
    }

    #[test]
    fn nested_states_match_table() {
        for (k, row) in table3().iter().enumerate() {
            let Some(expect) = &row.nested else { continue };
            let (_, g, roots) = refined_row(k);
            let f = nested_state(&roots, &g).unwrap().vector;
            assert!(collinearity_defect(expect, &f) < 1e-3, "row {}", row.n);
        }
    }

    #[test]
    fn single_excitation_state_regression() {
        let (_, g, roots) = refined_row(1);
        let f = nested_state(&roots, &g).unwrap().vector;
        let pinned = [c(F_ROW2[0].0, F_ROW2[0].1), c(F_ROW2[1].0, F_ROW2[1].1)];
        assert!(collinearity_defect(&pinned, &f) < 1e-10, "{f:?}");
        assert!(pair(&f, &f).norm() > 0.0);
    }

    const F_ROW2: [(f64, f64); 2] = [(2.2394416350621568e-5, 0.0), (-0.0001465612723408853, 0.0)];

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(20))]
        #[test]
        fn biorthogonality_at_random_points(mr in -2.0f64..2.0, mi in -1.0f64..1.0, lr in -1.0f64..1.0, li in -1.0f64..1.0) {
            let (_, g) = gauge(2);
            let m = c(mr, mi);
            prop_assume!([m, m + 1.0, m - 1.0].iter().all(|k| (k * g.eta).sinh().norm() > 1e-3));
            prop_assume!([m - 1.0, m + 3.0].iter().all(|k| (k * g.eta).sinh().norm() > 1e-3));
            let r = gauge_identity_residuals(m, c(lr, li), &g).unwrap();
            prop_assert!(r.biorthogonality < 1e-12 && r.resolution < 1e-12 && r.hat_duality < 1e-12, "{:?}", r);
        }
    }
}

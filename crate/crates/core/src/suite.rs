//! Randomized identity suites at fixed seeds. Each suite reduces its samples
//! to one [`Check`] per identity: the largest residual against a threshold.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::bae::{bae_residuals, baes01_residuals, thread_pool, BetheRoots};
use crate::bethe::{reference_state, vacuum_residuals};
use crate::boundary::{check_dual_re, check_nested_re, check_re, gauge_params, ModelParams};
use crate::chain::{commutator_residual, identity_at_origin, transfer};
use crate::error::Result;
use crate::linalg::{rel_diff, vnorm, Cplx};
use crate::nested::{gauge_identity_residuals, nested_state, nested_transfer};
use crate::rmatrix::{
    check_crossing_unitarity, check_periodicity, check_pt_symmetry, check_unitarity, check_ybe, check_ybe_r4,
    sigma_link_residual,
};
use crate::tq::{lambda_hat, lambda_tq, vacuum_lambda};

#[derive(Clone, Debug, PartialEq)]
pub struct Check {
    pub name: String,
    pub residual: f64,
    pub threshold: f64,
}

impl Check {
    pub fn new(name: impl Into<String>, residual: f64, threshold: f64) -> Self {
        Check { name: name.into(), residual, threshold }
    }

    /// A NaN residual fails.
    pub fn passed(&self) -> bool {
        self.residual <= self.threshold
    }
}

pub fn all_passed(checks: &[Check]) -> bool {
    checks.iter().all(Check::passed)
}

/// Radius of the spectral-parameter samples of the algebraic identities.
pub const SAMPLE_RADIUS: f64 = 2.0;

/// `count` points drawn uniformly from the disc `|u| ≤ radius`.
pub fn sample_points(count: usize, radius: f64, seed: u64) -> Vec<Cplx> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let r = radius * rng.gen::<f64>().sqrt();
            let t = rng.gen_range(0.0..std::f64::consts::TAU);
            Cplx::from_polar(r, t)
        })
        .collect()
}

/// Inhomogeneities `θ_j = 0.01 j` used when a chain must not be homogeneous.
pub fn default_inhomogeneities(n: usize) -> Vec<Cplx> {
    (1..=n).map(|j| Cplx::new(0.01 * j as f64, 0.0)).collect()
}

fn max_over<T: Sync>(items: &[T], f: impl Fn(&T) -> f64 + Sync + Send) -> f64 {
    // NaN must survive the reduction so that it fails the check.
    items.par_iter().map(f).reduce(|| 0.0, |a, b| if a.is_nan() || b.is_nan() { f64::NAN } else { a.max(b) })
}

/// R-matrix and reflection identities over `count` random samples each.
pub fn algebraic_suite(params: &ModelParams, count: usize, seed: u64, tol: f64) -> Vec<Check> {
    let eta = params.eta;
    let pts = sample_points(3 * count, SAMPLE_RADIUS, seed);
    let triples: Vec<[Cplx; 3]> = pts.chunks(3).map(|c| [c[0], c[1], c[2]]).collect();
    let singles: Vec<Cplx> = pts[..count].to_vec();
    let pairs: Vec<[Cplx; 2]> = triples.iter().map(|t| [t[0], t[1]]).collect();
    thread_pool().install(|| {
        vec![
            Check::new("ybe", max_over(&triples, |t| check_ybe(t[0], t[1], t[2], eta)), tol),
            Check::new("ybe_nested", max_over(&triples, |t| check_ybe_r4(t[0], t[1], t[2], eta)), tol),
            Check::new("unitarity", max_over(&singles, |&u| check_unitarity(u, eta)), tol),
            Check::new("crossing_unitarity", max_over(&singles, |&u| check_crossing_unitarity(u, eta)), tol),
            Check::new("pt_symmetry", max_over(&singles, |&u| check_pt_symmetry(u, eta)), tol),
            Check::new("periodicity", max_over(&singles, |&u| check_periodicity(u, eta)), tol),
            Check::new("sigma_link", max_over(&pairs, |p| sigma_link_residual(p[0], p[1], eta)), tol),
            Check::new("reflection", max_over(&pairs, |p| check_re(p[0], p[1], params)), tol),
            Check::new("dual_reflection", max_over(&pairs, |p| check_dual_re(p[0], p[1], params)), tol),
            Check::new("nested_reflection", max_over(&pairs, |p| check_nested_re(p[0], p[1], params)), tol),
        ]
    })
}

/// Radius of the transfer-matrix samples.
pub const TRANSFER_RADIUS: f64 = 1.0;

/// Commutativity of `t(u)` at `pairs` random pairs, once with random
/// inhomogeneities and once on the homogeneous chain, and `t(0) ∝ Id`.
pub fn integrability_suite(params: &ModelParams, pairs: usize, seed: u64, tol_comm: f64, tol_origin: f64) -> Vec<Check> {
    let n = params.n_sites();
    let pts = sample_points(2 * pairs, TRANSFER_RADIUS, seed);
    let uv: Vec<[Cplx; 2]> = pts.chunks(2).map(|c| [c[0], c[1]]).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let theta: Vec<Cplx> = (0..n).map(|_| Cplx::new(rng.gen_range(-0.3..0.3), rng.gen_range(-0.3..0.3))).collect();
    let inhom = params.with_theta(theta);
    let hom = params.with_theta(vec![Cplx::new(0.0, 0.0); n]);
    thread_pool().install(|| {
        vec![
            Check::new("commutativity_inhomogeneous", max_over(&uv, |p| commutator_residual(p[0], p[1], &inhom)), tol_comm),
            Check::new("commutativity_homogeneous", max_over(&uv, |p| commutator_residual(p[0], p[1], &hom)), tol_comm),
            Check::new("transfer_at_origin", identity_at_origin(params).1, tol_origin),
        ]
    })
}

/// Twenty points on which the vacuum eigenvalue is compared.
pub fn vacuum_grid() -> Vec<Cplx> {
    (0..20)
        .map(|k| {
            let t = k as f64;
            Cplx::new(-0.95 + 0.1 * t, 0.4 * (0.9 * t + 0.3).cos())
        })
        .collect()
}

/// `Λ(u)` at `M = 0` against `Λ₀(u)`, `t(u)Ψ₀ = Λ₀(u)Ψ₀`, and the block
/// actions on `Ψ₀`, all relative.
pub fn vacuum_suite(params: &ModelParams, tol: f64) -> Result<Vec<Check>> {
    let g = gauge_params(params, 0)?;
    let grid = vacuum_grid();
    let empty = BetheRoots::empty();
    let mut tq = 0.0f64;
    for &u in &grid {
        let l0 = vacuum_lambda(u, params);
        tq = tq.max((lambda_tq(u, &empty, params, &g)? - l0).norm() / l0.norm());
    }
    let psi = reference_state(params.n_sites());
    let eig = max_over(&grid, |&u| {
        let l0 = vacuum_lambda(u, params);
        let w = transfer(u, params).matrix.matvec(&psi);
        let r: f64 = w.iter().zip(&psi).map(|(a, b)| (a - l0 * b).norm_sqr()).sum::<f64>().sqrt();
        r / (l0.norm() * vnorm(&psi))
    });
    let blocks = max_over(&grid, |&u| vacuum_residuals(u, params).max_residual());
    Ok(vec![
        Check::new("vacuum_tq", tq, tol),
        Check::new("vacuum_eigenvector", eig, tol),
        Check::new("vacuum_block_actions", blocks, tol),
    ])
}

/// Thresholds of [`nested_suite`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NestedTolerances {
    pub forms: f64,
    pub gauge: f64,
    pub eigen: f64,
    pub bae_forms: f64,
}

impl Default for NestedTolerances {
    fn default() -> Self {
        NestedTolerances { forms: 1e-10, gauge: 1e-12, eigen: 1e-9, bae_forms: 1e-11 }
    }
}

/// Nested-level properties on solved root sets: agreement of the two forms
/// of `t̂`, gauge-vector dualities at random `(m, λ)`, `t̂|F⟩ = Λ̂|F⟩`, and
/// agreement of the two first-level Bethe equation forms.
pub fn nested_suite(params: &ModelParams, solutions: &[BetheRoots], seed: u64, tol: NestedTolerances) -> Result<Vec<Check>> {
    let eta = params.eta;
    let lambdas = sample_points(10, 0.6, seed);
    let mut forms = 0.0f64;
    let mut eigen = 0.0f64;
    let mut bae_forms = 0.0f64;
    for roots in solutions.iter().filter(|r| r.m() > 0) {
        let g = gauge_params(params, roots.m())?;
        let f = nested_state(roots, &g)?.vector;
        for &l in &lambdas {
            let t = nested_transfer(l, roots, params, &g)?;
            forms = forms.max(rel_diff(&t.form_a, &t.form_b));
            let lh = lambda_hat(l, roots, &g)?;
            let tf = t.form_a.matvec(&f);
            let r: f64 = tf.iter().zip(&f).map(|(a, b)| (a - lh * b).norm_sqr()).sum::<f64>().sqrt();
            eigen = eigen.max(r / vnorm(&f));
        }
        let a = bae_residuals(roots, params, &g)?;
        let b = baes01_residuals(roots, params, &g)?;
        for (x, y) in a.iter().zip(&b) {
            bae_forms = bae_forms.max((x - y).norm());
        }
    }
    let g = gauge_params(params, 0)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9a09e);
    let mut gauge = 0.0f64;
    let mut drawn = 0;
    while drawn < 20 {
        let m = Cplx::new(rng.gen_range(-2.0..2.0), rng.gen_range(-1.0..1.0));
        let l = Cplx::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        if [-1.0, 0.0, 1.0, 3.0].iter().any(|k| ((m + k) * eta).sinh().norm() < 1e-3) {
            continue;
        }
        let r = gauge_identity_residuals(m, l, &g)?;
        gauge = gauge.max(r.biorthogonality).max(r.resolution).max(r.hat_duality);
        drawn += 1;
    }
    Ok(vec![
        Check::new("nested_transfer_forms", forms, tol.forms),
        Check::new("gauge_vectors", gauge, tol.gauge),
        Check::new("nested_eigenvector", eigen, tol.eigen),
        Check::new("first_level_forms", bae_forms, tol.bae_forms),
    ])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tables::table_params;

    #[test]
    fn samples_are_deterministic_and_bounded() {
        let a = sample_points(50, 2.0, 3);
        assert_eq!(a, sample_points(50, 2.0, 3));
        assert_ne!(a, sample_points(50, 2.0, 4));
        assert!(a.iter().all(|u| u.norm() <= 2.0));
    }

    #[test]
    fn nan_fails_a_check() {
        assert!(!Check::new("x", f64::NAN, 1.0).passed());
        assert!(max_over(&[1.0, f64::NAN, 0.5], |x| *x).is_nan());
    }

    #[test]
    fn suites_pass_on_table_parameters() {
        let p = table_params(2).with_theta(default_inhomogeneities(2));
        let checks = algebraic_suite(&p, 10, 1, 1e-12);
        assert!(all_passed(&checks), "{checks:?}");
        let checks = integrability_suite(&p, 4, 2, 1e-10, 1e-11);
        assert!(all_passed(&checks), "{checks:?}");
        let checks = vacuum_suite(&p, 1e-11).unwrap();
        assert!(all_passed(&checks), "{checks:?}");
    }

    #[test]
    fn broken_constraint_fails_reflection() {
        let mut p = table_params(2);
        p.minus.c2 += 0.05;
        let checks = algebraic_suite(&p, 5, 1, 1e-12);
        let re = checks.iter().find(|c| c.name == "reflection").unwrap();
        assert!(!re.passed());
    }
}

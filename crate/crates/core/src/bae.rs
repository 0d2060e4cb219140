//! Two-level Bethe equations: root sets, residuals, the damped Newton
//! solver, canonical forms, multistart discovery and ED matching.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::boundary::{GaugeParams, ModelParams};
use crate::chain::EdLevel;
use crate::error::{Error, Result};
use crate::linalg::{Cplx, Lu, CMat};
use crate::scalar::{Dual, Scalar};
use crate::tq::{a0, b0, energy, hconst, kfun1, kfun2, kfun3, lambda_hat, lambda_tq, q1, q2};

/// Distance to a pole below which a root set is rejected.
pub const ROOT_POLE_TOL: f64 = 1e-10;

/// Level-one roots `u_k` and level-two roots `g_l`, equally many.
#[derive(Clone, Debug, PartialEq)]
pub struct BetheRoots {
    pub u_roots: Vec<Cplx>,
    pub g_roots: Vec<Cplx>,
}

impl BetheRoots {
    /// Validates lengths, finiteness and the parameter-free poles
    /// `sinh(2u+η)`, `sinh(2u+2η)` and `sinh(2g+η)`.
    pub fn new(u_roots: Vec<Cplx>, g_roots: Vec<Cplx>, eta: Cplx) -> Result<Self> {
        if u_roots.len() != g_roots.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} level-one roots against {} level-two roots",
                u_roots.len(),
                g_roots.len()
            )));
        }
        if !u_roots.iter().chain(&g_roots).all(|x| x.is_finite()) {
            return Err(Error::NonFinite("Bethe roots".into()));
        }
        for &u in &u_roots {
            if (2.0 * u + eta).sinh().norm() < ROOT_POLE_TOL || (2.0 * u + 2.0 * eta).sinh().norm() < ROOT_POLE_TOL {
                return Err(Error::PoleSet(format!("u = {u}")));
            }
        }
        for &g in &g_roots {
            if (2.0 * g + eta).sinh().norm() < ROOT_POLE_TOL {
                return Err(Error::PoleSet(format!("g = {g}")));
            }
        }
        Ok(BetheRoots { u_roots, g_roots })
    }

    pub fn empty() -> Self {
        BetheRoots { u_roots: Vec::new(), g_roots: Vec::new() }
    }

    pub fn m(&self) -> usize {
        self.u_roots.len()
    }

    /// `λ_k = u_k + η/2`.
    pub fn lambdas(&self, eta: Cplx) -> Vec<Cplx> {
        self.u_roots.iter().map(|u| u + eta / 2.0).collect()
    }

    /// `w_l = g_l + η/2`.
    pub fn ws(&self, eta: Cplx) -> Vec<Cplx> {
        self.g_roots.iter().map(|g| g + eta / 2.0).collect()
    }

    fn flat(&self) -> Vec<Cplx> {
        self.u_roots.iter().chain(&self.g_roots).copied().collect()
    }

    fn from_flat(x: &[Cplx]) -> Self {
        let m = x.len() / 2;
        BetheRoots { u_roots: x[..m].to_vec(), g_roots: x[m..].to_vec() }
    }

    /// Canonical representative under `u → −u−η`, `g → −g−2η` and shifts by
    /// `iπ`, with each level sorted by `(Re, Im)`.
    pub fn canonical(&self, eta: Cplx) -> BetheRoots {
        let mut u: Vec<Cplx> = self.u_roots.iter().map(|&x| reflect_into(x, eta)).collect();
        let mut g: Vec<Cplx> = self.g_roots.iter().map(|&x| reflect_into(x, 2.0 * eta)).collect();
        sort_roots(&mut u);
        sort_roots(&mut g);
        BetheRoots { u_roots: u, g_roots: g }
    }

    /// Whether both canonical forms agree root by root within `tol`.
    pub fn same_set(&self, other: &BetheRoots, eta: Cplx, tol: f64) -> bool {
        if self.m() != other.m() {
            return false;
        }
        let (a, b) = (self.canonical(eta), other.canonical(eta));
        a.flat().iter().zip(b.flat()).all(|(x, y)| (x - y).norm() <= tol)
    }
}

const TIE_TOL: f64 = 1e-9;

/// Maps `x` to the representative of `{x, −x−s} + iπℤ` with
/// `Re x ≥ −Re s/2` (and `Im x ≥ −Im s/2` on the symmetry line) and
/// `Im x ∈ (−π/2, π/2]`.
fn reflect_into(x: Cplx, s: Cplx) -> Cplx {
    use std::f64::consts::PI;
    let wrap = |z: Cplx| {
        let k = ((z.im + PI / 2.0) / PI).ceil() - 1.0;
        Cplx::new(z.re, z.im - k * PI)
    };
    let x = wrap(x);
    let line = -s.re / 2.0;
    let flip = x.re < line - TIE_TOL || ((x.re - line).abs() <= TIE_TOL && wrap(-x - s).im > x.im + TIE_TOL);
    if flip {
        wrap(-x - s)
    } else {
        x
    }
}

fn sort_roots(v: &mut [Cplx]) {
    v.sort_by(|a, b| {
        if (a.re - b.re).abs() > TIE_TOL {
            a.re.total_cmp(&b.re)
        } else {
            a.im.total_cmp(&b.im)
        }
    });
}

/// Bethe equations as printed: the `M` level-one residuals
/// `1 + (ratio)` first, then the `M` level-two residuals `LHS − RHS`.
fn residuals_generic<S: Scalar>(us: &[S], gs: &[S], params: &ModelParams, g: &GaugeParams) -> Vec<S> {
    let eta = params.eta;
    let h = hconst(us.len(), g);
    let one = S::from(Cplx::new(1.0, 0.0));
    let mut out = Vec::with_capacity(2 * us.len());
    for &u in us {
        let ratio = (u * 2.0).sinh() / (u * 2.0 + eta * 2.0).sinh() * kfun2(u + eta * 0.5, g) * b0(u, params)
            / (kfun1(u, params) * a0(u, params))
            * q1(u + eta, us, eta)
            * q2(u - eta * 0.5, gs, eta)
            / (q1(u - eta, us, eta) * q2(u + eta * 0.5, gs, eta));
        out.push(one + ratio);
    }
    for &x in gs {
        let k3 = kfun3(x + eta * 0.5, g);
        let q1s = q1(x + eta, us, eta);
        let q2s = q2(x + eta * 1.5, gs, eta);
        let lhs = one
            + (x * 2.0 + eta * 3.0).sinh() / (x * 2.0 + eta).sinh() * kfun2(x + eta * 0.5, g) / k3 * q1s
                * q2(x - eta * 0.5, gs, eta)
                / (q1(x, us, eta) * q2s);
        let rhs = -(x * 2.0 + eta * 2.0).sinh() * (x * 2.0 + eta * 3.0).sinh() * q1s / (k3 * q2s) * h;
        out.push(lhs - rhs);
    }
    out
}

/// The same equations multiplied through by their denominators; free of
/// poles, so Newton steps stay defined near coinciding roots.
fn cleared_generic<S: Scalar>(us: &[S], gs: &[S], params: &ModelParams, g: &GaugeParams) -> Vec<S> {
    let eta = params.eta;
    let h = hconst(us.len(), g);
    let mut out = Vec::with_capacity(2 * us.len());
    for &u in us {
        let a = (u * 2.0 + eta * 2.0).sinh() * kfun1(u, params) * a0(u, params) * q1(u - eta, us, eta)
            * q2(u + eta * 0.5, gs, eta);
        let b = (u * 2.0).sinh() * kfun2(u + eta * 0.5, g) * b0(u, params) * q1(u + eta, us, eta)
            * q2(u - eta * 0.5, gs, eta);
        out.push(a + b);
    }
    for &x in gs {
        let l = x + eta * 0.5;
        let (s1, s2, s3) = ((x * 2.0 + eta).sinh(), (x * 2.0 + eta * 2.0).sinh(), (x * 2.0 + eta * 3.0).sinh());
        let t1 = s1 * kfun3(l, g) * q1(x, us, eta) * q2(x + eta * 1.5, gs, eta);
        let t2 = s3 * kfun2(l, g) * q1(x + eta, us, eta) * q2(x - eta * 0.5, gs, eta);
        let t3 = s1 * s2 * s3 * q1(x + eta, us, eta) * q1(x, us, eta) * h;
        out.push(t1 + t2 + t3);
    }
    out
}

fn finite_or_pole(v: Vec<Cplx>) -> Result<Vec<Cplx>> {
    if v.iter().all(|x| x.is_finite()) {
        Ok(v)
    } else {
        Err(Error::PoleSet("a Bethe-equation denominator vanishes".into()))
    }
}

/// Residuals of the printed equations (`2M` values).
pub fn bae_residuals(roots: &BetheRoots, params: &ModelParams, g: &GaugeParams) -> Result<Vec<Cplx>> {
    finite_or_pole(residuals_generic(&roots.u_roots, &roots.g_roots, params, g))
}

/// Pole-free multiplied-through residuals (`2M` values).
pub fn cleared_residuals(roots: &BetheRoots, params: &ModelParams, g: &GaugeParams) -> Result<Vec<Cplx>> {
    finite_or_pole(cleared_generic(&roots.u_roots, &roots.g_roots, params, g))
}

/// Level-one residuals in the form that divides by the nested eigenvalue,
/// `1 + K⁽¹⁾ sinh(2u+3η)/sinh(2u+η) · a₀ Q⁽¹⁾(u−η) / (b₀ Λ̂(u+η/2))`.
pub fn baes01_residuals(roots: &BetheRoots, params: &ModelParams, g: &GaugeParams) -> Result<Vec<Cplx>> {
    let eta = params.eta;
    let us = &roots.u_roots;
    us.iter()
        .map(|&u| {
            let lh = lambda_hat(u + eta / 2.0, roots, g)?;
            let v = kfun1(u, params) * (2.0 * u + 3.0 * eta).sinh() / (2.0 * u + eta).sinh() * a0(u, params)
                * q1(u - eta, us, eta)
                / (b0(u, params) * lh);
            let r = Cplx::new(1.0, 0.0) + v;
            if r.is_finite() {
                Ok(r)
            } else {
                Err(Error::PoleSet(format!("Λ̂ vanishes at u = {u}")))
            }
        })
        .collect()
}

/// Largest modulus; infinite if any entry is not finite.
fn max_abs(v: &[Cplx]) -> f64 {
    v.iter().map(|x| if x.is_finite() { x.norm() } else { f64::INFINITY }).fold(0.0, f64::max)
}

type ResidualFn = fn(&[Dual], &[Dual], &ModelParams, &GaugeParams) -> Vec<Dual>;

/// Residual values and Jacobian at `x` by forward-mode differentiation,
/// one dual sweep per unknown.
fn value_and_jacobian(f: ResidualFn, x: &[Cplx], params: &ModelParams, g: &GaugeParams) -> (Vec<Cplx>, CMat) {
    let n = x.len();
    let m = n / 2;
    let mut jac = CMat::zeros(n, n);
    let mut val = Vec::new();
    for j in 0..n {
        let xd: Vec<Dual> =
            x.iter().enumerate().map(|(k, &v)| if k == j { Dual::variable(v) } else { Dual::constant(v) }).collect();
        let r = f(&xd[..m], &xd[m..], params, g);
        if j == 0 {
            val = r.iter().map(|d| d.v).collect();
        }
        for (i, d) in r.iter().enumerate() {
            jac[(i, j)] = d.d;
        }
    }
    (val, jac)
}

fn eval(f: ResidualFn, x: &[Cplx], params: &ModelParams, g: &GaugeParams) -> Vec<Cplx> {
    let m = x.len() / 2;
    let xd: Vec<Dual> = x.iter().map(|&v| Dual::constant(v)).collect();
    f(&xd[..m], &xd[m..], params, g).iter().map(|d| d.v).collect()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NewtonConfig {
    /// Convergence threshold on the largest printed-form residual.
    pub tol: f64,
    pub max_iter: usize,
    pub max_halvings: usize,
    /// Largest residual accepted when the iteration has become stationary.
    pub stationary_tol: f64,
}

impl Default for NewtonConfig {
    fn default() -> Self {
        NewtonConfig { tol: 1e-12, max_iter: 200, max_halvings: 8, stationary_tol: 1e-10 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NewtonStatus {
    /// Largest residual at or below the tolerance.
    Converged,
    /// Newton steps have shrunk to rounding level with the residual below
    /// the stationary tolerance; the residual floor is set by conditioning.
    Stationary,
    MaxIterations,
    Singular,
    /// The iterate reached a pole of the printed equations.
    Pole,
}

#[derive(Clone, Debug)]
pub struct NewtonOutcome {
    /// Last iterate.
    pub roots: BetheRoots,
    pub status: NewtonStatus,
    pub iterations: usize,
    /// Largest printed-form residual at the last iterate.
    pub residual: f64,
}

impl NewtonOutcome {
    pub fn is_solution(&self) -> bool {
        matches!(self.status, NewtonStatus::Converged | NewtonStatus::Stationary)
    }
}

fn step_size(dx: &[Cplx], x: &[Cplx]) -> f64 {
    max_abs(dx) / (1.0 + max_abs(x))
}

/// Longest Newton step per root; keeps the iteration inside the region
/// where the seed is meaningful.
const MAX_STEP: f64 = 0.1;

/// One damped Newton step on `f`: the step (capped at [`MAX_STEP`]) is
/// halved up to `max_halvings` times until the residual decreases; if it
/// never does, the smallest trial step is taken when `accept_any` is set.
/// Returns `(x_new, |F(x_new)|, full step)`.
fn damped_step(
    f: ResidualFn,
    x: &[Cplx],
    params: &ModelParams,
    g: &GaugeParams,
    cfg: &NewtonConfig,
    accept_any: bool,
) -> std::result::Result<(Vec<Cplx>, f64, f64), NewtonStatus> {
    let (fx, jac) = value_and_jacobian(f, x, params, g);
    let r0 = max_abs(&fx);
    let lu = Lu::new(&jac).map_err(|_| NewtonStatus::Singular)?;
    let rhs: Vec<Cplx> = fx.iter().map(|v| -v).collect();
    let mut dx = lu.solve(&rhs);
    if !dx.iter().all(|v| v.is_finite()) {
        return Err(NewtonStatus::Singular);
    }
    let longest = max_abs(&dx);
    if longest > MAX_STEP {
        dx.iter_mut().for_each(|v| *v *= MAX_STEP / longest);
    }
    let full = step_size(&dx, x);
    let mut t = 1.0;
    let mut best = None;
    for _ in 0..=cfg.max_halvings {
        let trial: Vec<Cplx> = x.iter().zip(&dx).map(|(a, d)| a + d * t).collect();
        let r = max_abs(&eval(f, &trial, params, g));
        if r.is_finite() && r < r0 {
            return Ok((trial, r, full));
        }
        if r.is_finite() && accept_any {
            best = Some((trial, r));
        }
        t *= 0.5;
    }
    best.map(|(x, r)| (x, r, full)).ok_or(if accept_any { NewtonStatus::Pole } else { NewtonStatus::MaxIterations })
}

/// Stationarity: the Newton step has shrunk below this relative size.
const STATIONARY_STEP: f64 = 1e-13;

/// Damped Newton on the printed equations from `x`, for at most `budget`
/// iterations.
fn polish(x: Vec<Cplx>, budget: usize, params: &ModelParams, g: &GaugeParams, cfg: &NewtonConfig) -> NewtonOutcome {
    let printed = |x: &[Cplx]| max_abs(&eval(residuals_generic, x, params, g));
    let done = |x: Vec<Cplx>, status, iterations| {
        let residual = printed(&x);
        NewtonOutcome { roots: BetheRoots::from_flat(&x), status, iterations, residual }
    };
    let mut x = x;
    let mut it = 0;
    let mut small_steps = 0;
    loop {
        let r = printed(&x);
        if r <= cfg.tol {
            return done(x, NewtonStatus::Converged, it);
        }
        if !r.is_finite() {
            return done(x, NewtonStatus::Pole, it);
        }
        if it >= budget {
            return done(x, NewtonStatus::MaxIterations, it);
        }
        it += 1;
        match damped_step(residuals_generic, &x, params, g, cfg, true) {
            Ok((nx, _, full)) => {
                small_steps = if full <= STATIONARY_STEP { small_steps + 1 } else { 0 };
                x = nx;
                if small_steps >= 3 && printed(&x) <= cfg.stationary_tol {
                    return done(x, NewtonStatus::Stationary, it);
                }
            }
            Err(status) => return done(x, status, it),
        }
    }
}

/// Refines `seed` to a solution of the Bethe equations.
///
/// The first attempt runs damped Newton on the printed equations from the
/// seed. If that fails, a second attempt starts again from the seed with
/// the pole-free cleared equations, which stay regular when roots approach
/// a singular string, and then polishes on the printed equations. Near such
/// strings the printed residual has a rounding floor that can exceed
/// `cfg.tol`; the iteration then ends as [`NewtonStatus::Stationary`] once
/// the steps stop shrinking with the residual below `cfg.stationary_tol`.
pub fn newton_refine(seed: &BetheRoots, params: &ModelParams, g: &GaugeParams, cfg: &NewtonConfig) -> Result<NewtonOutcome> {
    let x0 = seed.flat();
    if !x0.iter().all(|v| v.is_finite()) {
        return Err(Error::NonFinite("Newton seed".into()));
    }
    let half = cfg.max_iter / 2;
    let first = polish(x0.clone(), half, params, g, cfg);
    if first.is_solution() || x0.is_empty() {
        return Ok(first);
    }
    let mut x = x0;
    let mut it = first.iterations;
    let cleared_budget = half / 2;
    for _ in 0..cleared_budget {
        it += 1;
        match damped_step(cleared_generic, &x, params, g, cfg, false) {
            Ok((nx, _, full)) => {
                x = nx;
                if full < 1e-10 {
                    break;
                }
            }
            Err(_) => break,
        }
    }
    let mut second = polish(x, cfg.max_iter.saturating_sub(it), params, g, cfg);
    second.iterations += it;
    if second.is_solution() || !(first.residual <= second.residual) {
        Ok(second)
    } else {
        Ok(NewtonOutcome { iterations: second.iterations, ..first })
    }
}

/// `max |Λ(x+ε) − Λ(x−ε)|` over `x = u_k` and `x = g_l + η/2`; stays
/// bounded as `ε → 0` exactly when the residues of `Λ` cancel.
pub fn residue_probe(roots: &BetheRoots, params: &ModelParams, g: &GaugeParams, eps: f64) -> Result<f64> {
    let eta = params.eta;
    let points = roots.u_roots.iter().copied().chain(roots.g_roots.iter().map(|x| x + eta / 2.0));
    let mut worst: f64 = 0.0;
    for x in points {
        let d = lambda_tq(x + eps, roots, params, g)? - lambda_tq(x - eps, roots, params, g)?;
        worst = worst.max(d.norm());
    }
    Ok(worst)
}

/// Sample points of `Λ(u)` stored with each record.
pub fn lambda_sample_points() -> Vec<Cplx> {
    (0..5).map(|k| Cplx::new(0.37 - 0.13 * k as f64, 0.21 + 0.05 * k as f64)).collect()
}

/// One solved state.
#[derive(Clone, Debug)]
pub struct SpectrumRecord {
    pub roots: BetheRoots,
    pub status: NewtonStatus,
    pub energy: Cplx,
    pub lambda_samples: Vec<(Cplx, Cplx)>,
    pub bae_residual: f64,
    pub ed_match_index: Option<usize>,
    pub state_residual: Option<f64>,
}

/// Builds the record of a refined root set (energy and `Λ` samples).
pub fn make_record(outcome: &NewtonOutcome, params: &ModelParams, g: &GaugeParams) -> Result<SpectrumRecord> {
    let roots = outcome.roots.clone();
    let e = energy(&roots, params, g)?;
    let lambda_samples = lambda_sample_points()
        .into_iter()
        .map(|u| lambda_tq(u, &roots, params, g).map(|v| (u, v)))
        .collect::<Result<Vec<_>>>()?;
    Ok(SpectrumRecord {
        roots,
        status: outcome.status,
        energy: e,
        lambda_samples,
        bae_residual: outcome.residual,
        ed_match_index: None,
        state_residual: None,
    })
}

/// Thread pool for the parallel solvers; `SU3_BETHE_THREADS` overrides the
/// number of workers.
pub fn thread_pool() -> rayon::ThreadPool {
    let n = std::env::var("SU3_BETHE_THREADS").ok().and_then(|v| v.parse::<usize>().ok()).unwrap_or(0);
    rayon::ThreadPoolBuilder::new().num_threads(n).build().expect("thread pool")
}

/// Refines every seed concurrently; results come back in seed order.
pub fn solve_seeds(
    seeds: &[BetheRoots],
    params: &ModelParams,
    g: &GaugeParams,
    cfg: &NewtonConfig,
) -> Vec<Result<NewtonOutcome>> {
    thread_pool().install(|| seeds.par_iter().map(|s| newton_refine(s, params, g, cfg)).collect())
}

/// Keeps the first of every group of solutions that coincide after
/// canonicalization (tolerance `1e-8`); non-solutions are dropped.
pub fn dedup_solutions(outcomes: &[NewtonOutcome], eta: Cplx) -> Vec<NewtonOutcome> {
    let mut kept: Vec<NewtonOutcome> = Vec::new();
    for o in outcomes.iter().filter(|o| o.is_solution()) {
        if !kept.iter().any(|k| k.roots.same_set(&o.roots, eta, 1e-8)) {
            kept.push(o.clone());
        }
    }
    kept
}

/// Region of the multistart seeds, `[−0.6, 0.6]²`.
pub const GRID_HALF_WIDTH: f64 = 0.6;

/// Deterministic multistart seeds: `count` root sets with `m` roots per
/// level, each `u` drawn from the `points × points` lattice on the
/// multistart square. Even-numbered seeds draw each `g` independently from
/// the lattice; odd-numbered ones place `g_l` next to `u_l` or `u_l − η/2`,
/// where level-two roots of physical states tend to sit.
pub fn grid_seeds(m: usize, points: usize, count: usize, eta: Cplx, rng_seed: u64) -> Vec<BetheRoots> {
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed ^ (m as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15));
    let lattice = |k: usize| -GRID_HALF_WIDTH + 2.0 * GRID_HALF_WIDTH * k as f64 / (points.max(2) - 1) as f64;
    let draw = |rng: &mut ChaCha8Rng| Cplx::new(lattice(rng.gen_range(0..points)), lattice(rng.gen_range(0..points)));
    (0..count)
        .map(|k| {
            let u: Vec<Cplx> = (0..m).map(|_| draw(&mut rng)).collect();
            let g = if k % 2 == 0 {
                (0..m).map(|_| draw(&mut rng)).collect()
            } else {
                u.iter()
                    .map(|&x| {
                        let shift = if rng.gen_bool(0.5) { -eta / 2.0 } else { Cplx::new(0.0, 0.0) };
                        x + shift + Cplx::new(rng.gen_range(-0.02..0.02), rng.gen_range(-0.02..0.02))
                    })
                    .collect()
            };
            BetheRoots { u_roots: u, g_roots: g }
        })
        .collect()
}

/// Multistart discovery for every excitation number `0 ≤ M ≤ N`.
pub fn grid_scan(
    params: &ModelParams,
    g: &GaugeParams,
    cfg: &NewtonConfig,
    points: usize,
    seeds_per_m: usize,
    rng_seed: u64,
) -> Vec<NewtonOutcome> {
    let n = params.n_sites();
    let mut all = Vec::new();
    for m in 0..=n {
        let seeds = if m == 0 { vec![BetheRoots::empty()] } else { grid_seeds(m, points, seeds_per_m, params.eta, rng_seed) };
        all.extend(solve_seeds(&seeds, params, g, cfg).into_iter().flatten());
    }
    dedup_solutions(&all, params.eta)
}

/// Assigns each record the nearest unused ED level within `tol`
/// (relative to `max(1, |E|)`), in record order. Returns the number of
/// records matched.
pub fn match_to_ed(records: &mut [SpectrumRecord], levels: &[EdLevel], tol: f64) -> usize {
    let mut used = vec![false; levels.len()];
    let mut count = 0;
    for rec in records.iter_mut() {
        rec.ed_match_index = None;
        let best = levels
            .iter()
            .enumerate()
            .filter(|(k, _)| !used[*k])
            .map(|(k, l)| (k, (l.energy - rec.energy).norm()))
            .min_by(|a, b| a.1.total_cmp(&b.1));
        if let Some((k, d)) = best {
            if d <= tol * rec.energy.norm().max(1.0) {
                used[k] = true;
                rec.ed_match_index = Some(k);
                count += 1;
            }
        }
    }
    count
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::boundary::gauge_params;
    use crate::chain::spectrum;
    use crate::tables::{table1, table_params};
    use proptest::prelude::*;

    fn c(a: f64, b: f64) -> Cplx {
        Cplx::new(a, b)
    }

    fn setup(n: usize) -> (ModelParams, GaugeParams) {
        let p = table_params(n);
        let g = gauge_params(&p, 0).unwrap();
        (p, g)
    }

    fn refine_row(k: usize) -> (ModelParams, GaugeParams, NewtonOutcome) {
        let (p, g) = setup(2);
        let row = &table1()[k];
        let out = newton_refine(&row.roots(p.eta).unwrap(), &p, &g, &NewtonConfig::default()).unwrap();
        (p, g, out)
    }

    #[test]
    fn construction_rejects_bad_sets() {
        let eta = c(0.2, 0.0);
        assert!(matches!(BetheRoots::new(vec![c(0.1, 0.0)], vec![], eta), Err(Error::DimensionMismatch(_))));
        assert!(matches!(BetheRoots::new(vec![c(-0.1, 0.0)], vec![c(0.3, 0.0)], eta), Err(Error::PoleSet(_))));
        assert!(matches!(BetheRoots::new(vec![c(0.3, 0.0)], vec![c(-0.1, 0.0)], eta), Err(Error::PoleSet(_))));
        assert!(BetheRoots::new(vec![c(f64::NAN, 0.0)], vec![c(0.3, 0.0)], eta).is_err());
    }

    #[test]
    fn empty_sector_has_no_equations() {
        let (p, g) = setup(2);
        assert!(bae_residuals(&BetheRoots::empty(), &p, &g).unwrap().is_empty());
    }

    #[test]
    fn first_row_converges() {
        let (p, g, out) = refine_row(0);
        assert_eq!(out.status, NewtonStatus::Converged);
        assert!(max_abs(&bae_residuals(&out.roots, &p, &g).unwrap()) <= 1e-12);
        let e = energy(&out.roots, &p, &g).unwrap();
        assert!((e - c(5.3807982858, 0.0)).norm() < 1e-9, "{e}");
        let row = &table1()[0];
        for (a, b) in out.roots.u_roots.iter().chain(&out.roots.g_roots).zip(row.u.iter().chain(&row.g)) {
            assert!((a - b).norm() < 5e-4);
        }
    }

    #[test]
    fn last_row_energy() {
        let (p, g, out) = refine_row(8);
        assert!(out.is_solution());
        let e = energy(&out.roots, &p, &g).unwrap();
        assert!((e - c(-2.5834417305, 0.0)).norm() < 1e-9, "{e}");
    }

    #[test]
    fn fixed_point_is_unchanged() {
        let (p, g, out) = refine_row(1);
        let again = newton_refine(&out.roots, &p, &g, &NewtonConfig::default()).unwrap();
        assert!(again.iterations <= 2);
        for (a, b) in again.roots.u_roots.iter().zip(&out.roots.u_roots) {
            assert!((a - b).norm() <= 1e-13);
        }
    }

    #[test]
    fn both_level_one_forms_agree() {
        let (p, g, out) = refine_row(0);
        let a = bae_residuals(&out.roots, &p, &g).unwrap();
        let b = baes01_residuals(&out.roots, &p, &g).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).norm() <= 1e-11);
        }
    }

    #[test]
    fn reflected_solution_stays_a_solution() {
        let (p, g, out) = refine_row(0);
        let mut refl = out.roots.clone();
        refl.u_roots[1] = -refl.u_roots[1] - p.eta;
        refl.g_roots[0] = -refl.g_roots[0] - 2.0 * p.eta;
        assert!(max_abs(&bae_residuals(&refl, &p, &g).unwrap()) <= 1e-12);
        assert!(refl.same_set(&out.roots, p.eta, 1e-14));
    }

    #[test]
    fn residues_cancel_on_solutions() {
        let (p, g, out) = refine_row(0);
        let big = residue_probe(&out.roots, &p, &g, 1e-4).unwrap();
        let small = residue_probe(&out.roots, &p, &g, 1e-6).unwrap();
        assert!(small <= big.max(1e-6), "{big} {small}");
        let off = BetheRoots::new(vec![c(0.19, 0.0), c(0.25, 0.0)], vec![c(0.18, 0.0), c(0.26, 0.0)], p.eta).unwrap();
        let big = residue_probe(&off, &p, &g, 1e-4).unwrap();
        let small = residue_probe(&off, &p, &g, 1e-6).unwrap();
        assert!(small > 10.0 * big);
    }

    #[test]
    fn jacobian_matches_finite_differences() {
        let (p, g) = setup(2);
        let x = vec![c(0.19, 0.01), c(0.23, -0.02), c(0.17, 0.03), c(0.27, 0.0)];
        let (_, jac) = value_and_jacobian(residuals_generic, &x, &p, &g);
        let h = 1e-6;
        for j in 0..4 {
            let mut xp = x.clone();
            let mut xm = x.clone();
            xp[j] += h;
            xm[j] -= h;
            let fp = eval(residuals_generic, &xp, &p, &g);
            let fm = eval(residuals_generic, &xm, &p, &g);
            for i in 0..4 {
                let fd = (fp[i] - fm[i]) / (2.0 * h);
                assert!((fd - jac[(i, j)]).norm() <= 1e-6 * (1.0 + fd.norm()));
            }
        }
    }

    #[test]
    fn canonical_form() {
        let eta = c(0.2, 0.0);
        let r = BetheRoots::new(vec![c(-0.3, 0.1), c(-0.1, -0.2)], vec![c(-0.5, 0.0), c(-0.2, -0.3)], eta).unwrap();
        let k = r.canonical(eta);
        assert_eq!(k.u_roots.len(), 2);
        assert!((k.u_roots[0] - c(-0.1, 0.2)).norm() < 1e-15);
        assert!((k.u_roots[1] - c(0.1, -0.1)).norm() < 1e-15);
        assert!((k.g_roots[0] - c(-0.2, 0.3)).norm() < 1e-15);
        assert!((k.g_roots[1] - c(0.1, 0.0)).norm() < 1e-15);
        let shifted = BetheRoots::new(
            vec![c(-0.1, -0.2 + std::f64::consts::PI), c(-0.3, 0.1)],
            vec![c(-0.2, -0.3), c(-0.5, 0.0)],
            eta,
        )
        .unwrap();
        assert!(r.same_set(&shifted, eta, 1e-12));
    }

    #[test]
    fn ed_matching_is_one_to_one() {
        let p = table_params(2);
        let levels = spectrum(&p).unwrap();
        let rec = |e: f64| SpectrumRecord {
            roots: BetheRoots::empty(),
            status: NewtonStatus::Converged,
            energy: c(e, 0.0),
            lambda_samples: vec![],
            bae_residual: 0.0,
            ed_match_index: None,
            state_residual: None,
        };
        let mut recs = vec![rec(3.5453692295), rec(3.5453692295), rec(100.0)];
        assert_eq!(match_to_ed(&mut recs, &levels, 1e-9), 1);
        assert!(recs[0].ed_match_index.is_some() && recs[1].ed_match_index.is_none());
    }

    #[test]
    fn grid_seeds_are_deterministic() {
        let eta = c(0.2, 0.0);
        let a = grid_seeds(2, 13, 5, eta, 7);
        let b = grid_seeds(2, 13, 5, eta, 7);
        assert_eq!(a, b);
        assert!(a.iter().flat_map(|r| r.flat()).all(|z| z.re.abs() <= 0.75 && z.im.abs() <= 0.65));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn reflection_of_a_level_one_root(k in 0usize..2, a in -0.4f64..0.4, b in -0.4f64..0.4) {
            let (p, g) = setup(2);
            let eta = p.eta;
            let base = BetheRoots::new(
                vec![c(0.19 + a * 0.1, b * 0.1), c(-0.25, 0.1 + b * 0.2)],
                vec![c(0.17, a * 0.2), c(0.31 + b * 0.1, -0.05)],
                eta,
            ).unwrap();
            let mut refl = base.clone();
            refl.u_roots[k] = -refl.u_roots[k] - eta;
            let r0 = bae_residuals(&base, &p, &g).unwrap();
            let r1 = bae_residuals(&refl, &p, &g).unwrap();
            for (i, (x, y)) in r0.iter().zip(&r1).enumerate() {
                // The reflected root's own ratio is inverted: 1 + Y becomes 1 + 1/Y.
                let expect = if i == k { x / (x - 1.0) } else { *x };
                prop_assert!((y.norm() - expect.norm()).abs() <= 1e-12 * (1.0 + expect.norm()));
            }
        }
    }
}

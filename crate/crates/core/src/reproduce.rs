//! Regeneration of the bundled reference tables: refine every tabulated
//! root set, compare energies and roots, match against exact
//! diagonalization, and rebuild the tabulated eigenstates.

use crate::bae::{make_record, match_to_ed, newton_refine, thread_pool, NewtonConfig, NewtonOutcome, SpectrumRecord};
use crate::bethe::{bethe_state, eigen_residual, TABLE_PAIRING};
use crate::boundary::{gauge_params, ModelParams};
use crate::chain::{spectrum, EdLevel};
use crate::error::Result;
use crate::linalg::{collinearity_defect, Cplx};
use crate::tables::{StateRow, TableRow};
use rayon::prelude::*;

/// Relative energy tolerance for assigning a root set to an ED level.
pub const ED_MATCH_TOL: f64 = 1e-8;

#[derive(Clone, Debug)]
pub struct RowOutcome {
    pub row: TableRow,
    pub outcome: NewtonOutcome,
    /// Present when the refined roots are a solution.
    pub record: Option<SpectrumRecord>,
    /// `|E − E_table|`.
    pub energy_error: f64,
    /// Largest distance of a refined root from its tabulated value.
    pub root_deviation: f64,
}

impl RowOutcome {
    pub fn converged(&self) -> bool {
        self.record.is_some()
    }
}

#[derive(Clone, Debug)]
pub struct TableReport {
    pub rows: Vec<RowOutcome>,
    pub levels: Vec<EdLevel>,
    /// Number of rows assigned one-to-one to an ED level.
    pub ed_matched: usize,
}

fn max_distance(a: &[Cplx], b: &[Cplx]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

/// Refines every row from its tabulated roots and matches the results to ED.
pub fn reproduce_root_table(rows: &[TableRow], params: &ModelParams, cfg: &NewtonConfig) -> Result<TableReport> {
    let eta = params.eta;
    let levels = spectrum(params)?;
    let solved: Vec<Result<RowOutcome>> = thread_pool().install(|| {
        rows.par_iter()
            .map(|row| {
                let g = gauge_params(params, row.m())?;
                let outcome = newton_refine(&row.roots(eta)?, params, &g, cfg)?;
                let record = if outcome.is_solution() { Some(make_record(&outcome, params, &g)?) } else { None };
                let energy_error = record.as_ref().map_or(f64::INFINITY, |r| (r.energy - Cplx::new(row.energy, 0.0)).norm());
                let root_deviation = max_distance(&outcome.roots.u_roots, &row.u).max(max_distance(&outcome.roots.g_roots, &row.g));
                Ok(RowOutcome { row: row.clone(), outcome, record, energy_error, root_deviation })
            })
            .collect()
    });
    let mut rows_out = solved.into_iter().collect::<Result<Vec<_>>>()?;
    let mut records: Vec<SpectrumRecord> = rows_out.iter().filter_map(|r| r.record.clone()).collect();
    let ed_matched = match_to_ed(&mut records, &levels, ED_MATCH_TOL);
    let mut it = records.into_iter();
    for r in rows_out.iter_mut().filter(|r| r.record.is_some()) {
        r.record = it.next();
    }
    Ok(TableReport { rows: rows_out, levels, ed_matched })
}

#[derive(Clone, Debug)]
pub struct StateOutcome {
    pub n: usize,
    pub energy: Cplx,
    pub h_residual: f64,
    pub max_t_residual: f64,
    /// Collinearity defect of `Ψ` against the tabulated vector.
    pub psi_defect: f64,
    /// Collinearity defect of `|F⟩` against the tabulated components, if any.
    pub nested_defect: Option<f64>,
    /// Collinearity defect of `Ψ` against the ED eigenvector of nearest energy.
    pub ed_defect: f64,
    pub nested: Vec<Cplx>,
    pub psi: Vec<Cplx>,
}

/// Rebuilds the tabulated eigenstates from the refined roots of `roots`.
/// Rows of `states` are paired with `roots` by row number.
pub fn reproduce_state_table(states: &[StateRow], roots: &TableReport, params: &ModelParams) -> Result<Vec<StateOutcome>> {
    states
        .iter()
        .map(|st| {
            let row = roots
                .rows
                .iter()
                .find(|r| r.row.n == st.n && r.converged())
                .ok_or_else(|| crate::Error::NoConvergence(format!("row {} has no converged roots", st.n)))?;
            let rts = &row.outcome.roots;
            let g = gauge_params(params, rts.m())?;
            let (f, psi) = bethe_state(rts, params, TABLE_PAIRING)?;
            let res = eigen_residual(&psi, rts, params, &g)?;
            let energy = res.energy.unwrap_or(Cplx::new(f64::NAN, 0.0));
            let level = roots
                .levels
                .iter()
                .min_by(|a, b| (a.energy - energy).norm().total_cmp(&(b.energy - energy).norm()));
            Ok(StateOutcome {
                n: st.n,
                energy,
                h_residual: res.h_residual.unwrap_or(f64::NAN),
                max_t_residual: res.max_t_residual(),
                psi_defect: collinearity_defect(&st.psi, &psi),
                nested_defect: st.nested.as_ref().map(|v| collinearity_defect(v, &f.vector)),
                ed_defect: level.map_or(f64::INFINITY, |l| collinearity_defect(&l.vector, &psi)),
                nested: f.vector,
                psi,
            })
        })
        .collect()
}

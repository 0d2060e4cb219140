//! The five subcommands. Each builds a [`Report`]; library errors abort
//! the command, failed checks do not.

use serde_json::{json, Value};
use su3_bethe::bae::{
    dedup_solutions, grid_scan, make_record, match_to_ed, newton_refine, solve_seeds, thread_pool, BetheRoots, NewtonConfig,
    NewtonOutcome, NewtonStatus,
};
use su3_bethe::bethe::{bethe_state, eigen_residual, TABLE_PAIRING};
use su3_bethe::boundary::{gauge_params, ModelParams};
use su3_bethe::chain::{hamiltonian, spectrum, EdLevel, HAMILTONIAN_FD_TOL};
use su3_bethe::linalg::collinearity_defect;
use su3_bethe::reproduce::{reproduce_root_table, reproduce_state_table, TableReport, ED_MATCH_TOL};
use su3_bethe::suite::{algebraic_suite, integrability_suite, vacuum_suite, Check};
use su3_bethe::tables::{table1, table2, table3, table_params, TableRow};
use su3_bethe::{Cplx, Error, Result};

use crate::config::RunConfig;
use crate::report::{cjson, cjson_list, num, Report, Table};
use crate::seeds::Seed;

pub fn config_json(cfg: &RunConfig) -> Value {
    let p = &cfg.params;
    let side = |b: &su3_bethe::boundary::BoundarySide| {
        json!({ "zeta": cjson(b.zeta), "c": cjson(b.c), "c1": cjson(b.c1), "c2": cjson(b.c2) })
    };
    let mut options = serde_json::Map::new();
    for (k, v) in cfg.option_entries() {
        options.insert(k.into(), json!(v));
    }
    json!({
        "eta": cjson(p.eta),
        "theta": cjson_list(&p.theta),
        "minus": side(&p.minus),
        "plus": side(&p.plus),
        "c2_minus_shift": cjson(cfg.c2_minus_shift),
        "options": options,
        "text": cfg.to_text(),
    })
}

fn status_name(s: NewtonStatus) -> &'static str {
    match s {
        NewtonStatus::Converged => "converged",
        NewtonStatus::Stationary => "stationary",
        NewtonStatus::MaxIterations => "max_iterations",
        NewtonStatus::Singular => "singular",
        NewtonStatus::Pole => "pole",
    }
}

fn roots_json(r: &BetheRoots) -> Value {
    json!({ "u": cjson_list(&r.u_roots), "g": cjson_list(&r.g_roots) })
}

fn roots_text(zs: &[Cplx]) -> String {
    zs.iter().map(|z| format!("{:e}{:+e}i", z.re, z.im)).collect::<Vec<_>>().join(" ")
}

fn require_homogeneous(p: &ModelParams) -> Result<()> {
    if p.is_homogeneous() {
        Ok(())
    } else {
        Err(Error::Inhomogeneous)
    }
}

pub fn verify(cfg: &RunConfig) -> Result<Report> {
    let o = &cfg.options;
    let p = &cfg.params;
    let mut r = Report::new("verify", config_json(cfg));
    r.checks.extend(algebraic_suite(p, o.samples, o.seed, o.tol_algebraic));
    r.checks.extend(integrability_suite(p, o.pairs, o.seed.wrapping_add(1), o.tol_commutativity, o.tol_origin));
    r.checks.extend(vacuum_suite(p, o.tol_vacuum)?);
    Ok(r)
}

pub fn spectrum_cmd(cfg: &RunConfig) -> Result<Report> {
    let p = &cfg.params;
    require_homogeneous(p)?;
    let mut r = Report::new("spectrum", config_json(cfg));
    let h = hamiltonian(p)?;
    r.checks.push(Check::new("hamiltonian_derivative", h.fd_discrepancy, HAMILTONIAN_FD_TOL));
    let levels = spectrum(p)?;
    let mut table = Table::new(&["index", "energy_re", "energy_im"]);
    let mut out = Vec::new();
    for (k, l) in levels.iter().enumerate() {
        table.push(vec![k.to_string(), num(l.energy.re), num(l.energy.im)]);
        out.push(json!({ "index": k, "energy": cjson(l.energy) }));
    }
    r.sections.insert("levels".into(), Value::Array(out));
    r.table = Some(table);
    Ok(r)
}

pub fn solve(cfg: &RunConfig, seeds: &[Seed], scan: bool) -> Result<Report> {
    let p = &cfg.params;
    let o = &cfg.options;
    let eta = p.eta;
    let ncfg = NewtonConfig::default();
    let mut r = Report::new("solve", config_json(cfg));

    // Seeds are refined in the gauge sector of their root count.
    let mut slots: Vec<Option<Result<NewtonOutcome>>> = (0..seeds.len()).map(|_| None).collect();
    let max_m = seeds.iter().map(|s| s.roots.m()).max().unwrap_or(0);
    for m in 0..=max_m {
        let idx: Vec<usize> = (0..seeds.len()).filter(|&k| seeds[k].roots.m() == m).collect();
        if idx.is_empty() {
            continue;
        }
        let g = gauge_params(p, m)?;
        let group: Vec<BetheRoots> = idx.iter().map(|&k| seeds[k].roots.clone()).collect();
        for (k, res) in idx.into_iter().zip(solve_seeds(&group, p, &g, &ncfg)) {
            slots[k] = Some(res);
        }
    }
    let outcomes: Vec<Result<NewtonOutcome>> = slots.into_iter().map(|x| x.expect("every seed solved")).collect();

    let mut pool: Vec<NewtonOutcome> = outcomes.iter().filter_map(|x| x.as_ref().ok().cloned()).collect();
    if scan {
        let g0 = gauge_params(p, 0)?;
        pool.extend(grid_scan(p, &g0, &ncfg, o.grid_points, o.seeds_per_m, o.grid_seed));
    }
    let distinct = dedup_solutions(&pool, eta);
    // A solution whose energy cannot be evaluated is listed, not fatal.
    let mut records = Vec::with_capacity(distinct.len());
    let mut rejected = Vec::new();
    for d in &distinct {
        let g = gauge_params(p, d.roots.m())?;
        match make_record(d, p, &g) {
            Ok(rec) => records.push(rec),
            Err(e) => rejected.push(json!({ "roots": roots_json(&d.roots), "residual": d.residual, "error": e.to_string() })),
        }
    }
    let levels: Vec<EdLevel> = if p.is_homogeneous() { spectrum(p)? } else { Vec::new() };
    let matched = if levels.is_empty() { 0 } else { match_to_ed(&mut records, &levels, ED_MATCH_TOL) };

    let find = |roots: &BetheRoots| records.iter().position(|rec| rec.roots.same_set(roots, eta, 1e-8));
    let mut seed_json = Vec::new();
    for (s, res) in seeds.iter().zip(&outcomes) {
        let (status, residual, index) = match res {
            Ok(o) if o.is_solution() => (status_name(o.status).to_string(), o.residual, find(&o.roots)),
            Ok(o) => (status_name(o.status).to_string(), o.residual, None),
            Err(e) => (format!("error: {e}"), f64::NAN, None),
        };
        if let Some(expected) = s.expected_energy {
            let err = index.map_or(f64::INFINITY, |k| (records[k].energy - Cplx::new(expected, 0.0)).norm());
            r.checks.push(Check::new(format!("seed_line{}.energy", s.line), err, o.tol_energy));
        }
        seed_json.push(json!({
            "line": s.line,
            "status": status,
            "residual": residual,
            "record": index,
            "expected_energy": s.expected_energy,
        }));
    }

    let mut table = Table::new(&["index", "m", "status", "energy_re", "energy_im", "bae_residual", "ed_level", "u", "g"]);
    let mut rec_json = Vec::new();
    for (k, rec) in records.iter().enumerate() {
        table.push(vec![
            k.to_string(),
            rec.roots.m().to_string(),
            status_name(rec.status).into(),
            num(rec.energy.re),
            num(rec.energy.im),
            num(rec.bae_residual),
            rec.ed_match_index.map_or(String::new(), |i| i.to_string()),
            roots_text(&rec.roots.u_roots),
            roots_text(&rec.roots.g_roots),
        ]);
        rec_json.push(json!({
            "index": k,
            "m": rec.roots.m(),
            "status": status_name(rec.status),
            "roots": roots_json(&rec.roots),
            "energy": cjson(rec.energy),
            "bae_residual": rec.bae_residual,
            "ed_level": rec.ed_match_index,
            "lambda_samples": rec.lambda_samples.iter().map(|(u, l)| json!({ "u": cjson(*u), "lambda": cjson(*l) })).collect::<Vec<_>>(),
        }));
    }
    r.sections.insert("seeds".into(), Value::Array(seed_json));
    r.sections.insert("records".into(), Value::Array(rec_json));
    r.sections.insert("rejected".into(), Value::Array(rejected));
    r.sections.insert("ed_levels".into(), json!(levels.len()));
    r.sections.insert("ed_matched".into(), json!(matched));
    r.table = Some(table);
    Ok(r)
}

/// Table rows for the chain length of `p`, if it has a bundled table.
fn table_for(p: &ModelParams) -> Option<Vec<TableRow>> {
    match p.n_sites() {
        2 => Some(table1()),
        3 => Some(table2()),
        _ => None,
    }
}

pub fn state(cfg: &RunConfig, seed: Option<&Seed>) -> Result<Report> {
    let p = &cfg.params;
    let o = &cfg.options;
    let (start, row) = match (seed, o.row) {
        (Some(s), _) => (s.roots.clone(), None),
        (None, Some(k)) => {
            let rows = table_for(p).ok_or_else(|| Error::InvalidParams(format!("no bundled table for N = {}", p.n_sites())))?;
            let row = rows.into_iter().find(|r| r.n == k).ok_or_else(|| Error::InvalidParams(format!("no table row {k}")))?;
            (row.roots(p.eta)?, Some(k))
        }
        (None, None) => return Err(Error::InvalidParams("state needs --seeds or a 'row' config key".into())),
    };
    let g = gauge_params(p, start.m())?;
    let refined = thread_pool().install(|| newton_refine(&start, p, &g, &NewtonConfig::default()))?;
    let mut r = Report::new("state", config_json(cfg));
    r.checks.push(Check::new("bae_residual", refined.residual, o.tol_bae));
    let roots = &refined.roots;
    let (nested, psi) = bethe_state(roots, p, TABLE_PAIRING)?;
    let res = eigen_residual(&psi, roots, p, &g)?;
    if let Some(h) = res.h_residual {
        r.checks.push(Check::new("h_residual", h, o.tol_state));
    }
    r.checks.push(Check::new("t_residual", res.max_t_residual(), o.tol_transfer));
    let energy = res.energy.unwrap_or(Cplx::new(f64::NAN, 0.0));
    if p.is_homogeneous() {
        let levels = spectrum(p)?;
        let near = levels.iter().min_by(|a, b| (a.energy - energy).norm().total_cmp(&(b.energy - energy).norm()));
        let d = near.map_or(f64::INFINITY, |l| collinearity_defect(&l.vector, &psi));
        r.checks.push(Check::new("ed_collinearity", d, o.tol_ed));
    }
    let reference = match row {
        Some(k) if *p == table_params(2) => table3().into_iter().find(|s| s.n == k),
        _ => None,
    };
    if let Some(st) = &reference {
        r.checks.push(Check::new("reference_collinearity", collinearity_defect(&st.psi, &psi), o.tol_reference));
    }

    let mut table = Table::new(&["index", "psi_re", "psi_im"]);
    for (k, z) in psi.iter().enumerate() {
        table.push(vec![k.to_string(), num(z.re), num(z.im)]);
    }
    r.sections.insert(
        "state".into(),
        json!({
            "row": row,
            "status": status_name(refined.status),
            "roots": roots_json(roots),
            "energy": cjson(energy),
            "nested": cjson_list(&nested.vector),
            "psi": cjson_list(&psi),
            "t_residuals": res.t_residuals.iter().map(|(u, x)| json!({ "u": cjson(*u), "residual": x })).collect::<Vec<_>>(),
        }),
    );
    r.table = Some(table);
    Ok(r)
}

fn root_table_checks(r: &mut Report, name: &str, rep: &TableReport, energy_tol: f64, root_tol: Option<f64>) -> Value {
    let mut rows = Vec::new();
    for row in &rep.rows {
        let k = row.row.n;
        let bae = if row.converged() { row.outcome.residual } else { f64::INFINITY };
        r.checks.push(Check::new(format!("{name}.row{k}.bae"), bae, 1e-12));
        r.checks.push(Check::new(format!("{name}.row{k}.energy"), row.energy_error, energy_tol));
        if let Some(t) = root_tol {
            r.checks.push(Check::new(format!("{name}.row{k}.roots"), row.root_deviation, t));
        }
        let ed = row.record.as_ref().and_then(|x| x.ed_match_index);
        r.checks.push(Check::new(format!("{name}.row{k}.ed_match"), if ed.is_some() { 0.0 } else { 1.0 }, 0.0));
        rows.push(json!({
            "n": k,
            "status": status_name(row.outcome.status),
            "roots": roots_json(&row.outcome.roots),
            "energy": row.record.as_ref().map(|x| cjson(x.energy)),
            "energy_quoted": row.row.energy,
            "energy_error": row.energy_error,
            "root_deviation": row.root_deviation,
            "bae_residual": row.outcome.residual,
            "ed_level": ed,
        }));
    }
    json!({ "rows": rows, "ed_levels": rep.levels.len(), "ed_matched": rep.ed_matched })
}

pub fn reproduce(cfg: &RunConfig) -> Result<Report> {
    let o = &cfg.options;
    let ncfg = NewtonConfig::default();
    let mut r = Report::new("reproduce", config_json(cfg));
    let mut t1 = None;
    if o.tables.contains(&1) || o.tables.contains(&3) {
        t1 = Some(reproduce_root_table(&table1(), &table_params(2), &ncfg)?);
    }
    if o.tables.contains(&1) {
        let v = root_table_checks(&mut r, "table1", t1.as_ref().expect("table 1 solved"), 1e-9, Some(5e-4));
        r.sections.insert("table1".into(), v);
    }
    if o.tables.contains(&2) {
        let rep = reproduce_root_table(&table2(), &table_params(3), &ncfg)?;
        let v = root_table_checks(&mut r, "table2", &rep, 1e-5, None);
        r.sections.insert("table2".into(), v);
    }
    if o.tables.contains(&3) {
        let states = reproduce_state_table(&table3(), t1.as_ref().expect("table 1 solved"), &table_params(2))?;
        let mut rows = Vec::new();
        for s in &states {
            r.checks.push(Check::new(format!("table3.row{}.h_residual", s.n), s.h_residual, 1e-9));
            r.checks.push(Check::new(format!("table3.row{}.collinearity", s.n), s.psi_defect, 1e-3));
            rows.push(json!({
                "n": s.n,
                "energy": cjson(s.energy),
                "h_residual": s.h_residual,
                "t_residual": s.max_t_residual,
                "collinearity": s.psi_defect,
                "nested_collinearity": s.nested_defect,
                "ed_collinearity": s.ed_defect,
            }));
        }
        r.sections.insert("table3".into(), json!({ "rows": rows }));
    }
    Ok(r)
}

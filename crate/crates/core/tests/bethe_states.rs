//! Every tabulated root set yields a Bethe state equal, up to scale, to the
//! exact eigenvector at its energy.

use su3_bethe::bae::NewtonConfig;
use su3_bethe::bethe::{bethe_state, eigen_residual, TABLE_PAIRING};
use su3_bethe::boundary::gauge_params;
use su3_bethe::linalg::collinearity_defect;
use su3_bethe::reproduce::reproduce_root_table;
use su3_bethe::tables::{table1, table2, table_params, TableRow};

fn check_rows(rows: &[TableRow], n: usize, h_tol: f64) {
    let p = table_params(n);
    let rep = reproduce_root_table(rows, &p, &NewtonConfig::default()).unwrap();
    for r in &rep.rows {
        let roots = &r.outcome.roots;
        let g = gauge_params(&p, roots.m()).unwrap();
        let (_, psi) = bethe_state(roots, &p, TABLE_PAIRING).unwrap();
        let res = eigen_residual(&psi, roots, &p, &g).unwrap();
        let e = res.energy.unwrap();
        assert!(res.h_residual.unwrap() <= h_tol, "N={n} row {}: {:?}", r.row.n, res.h_residual);
        assert!(res.max_t_residual() <= 1e-8, "N={n} row {}: {}", r.row.n, res.max_t_residual());
        let level = rep.levels.iter().min_by(|a, b| (a.energy - e).norm().total_cmp(&(b.energy - e).norm())).unwrap();
        assert!((level.energy - e).norm() <= 1e-6);
        let d = collinearity_defect(&level.vector, &psi);
        assert!(d <= 1e-6, "N={n} row {}: projective distance {d:.2e}", r.row.n);
    }
}

#[test]
fn two_site_states_match_exact_eigenvectors() {
    check_rows(&table1(), 2, 1e-9);
}

#[test]
fn three_site_states_match_exact_eigenvectors() {
    // Row 18 is a near-singular string (u1 − u2 − η ≈ 6e-6); its state carries
    // an H residual of a few 1e-8 while staying within 1e-8 of the exact eigenvector.
    check_rows(&table2(), 3, 1e-7);
}

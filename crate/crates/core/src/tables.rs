//! Reference tables bundled as text fixtures, their parameter set, and the
//! complex-number text format shared with configuration files.
//!
//! Root tables hold one row per line with `&`-separated cells
//! `u_1 & … & u_N & g_1 & … & g_N & E & n`, where `-` marks an absent root.
//! A line `@erratum <n> <u_k|g_k> = <value>` replaces one printed cell.
//! The state table holds `key = value` blocks opened by `n = <row>`.

use crate::bae::BetheRoots;
use crate::boundary::{BoundarySide, ModelParams};
use crate::error::{Error, Result};
use crate::linalg::{re, Cplx, ZERO};

pub const TABLE1: &str = include_str!("../fixtures/table1.txt");
pub const TABLE2: &str = include_str!("../fixtures/table2.txt");
pub const TABLE3: &str = include_str!("../fixtures/table3.txt");

/// The parameter set of the reference tables on a homogeneous chain of `n` sites.
pub fn table_params(n: usize) -> ModelParams {
    let minus = BoundarySide::new(re(0.1), re(1.0), re(-0.3)).expect("c1 nonzero");
    let plus = BoundarySide::new(re(-0.4), re(-0.3), re(-0.7)).expect("c1' nonzero");
    ModelParams::new(re(0.2), minus, plus, vec![ZERO; n])
}

/// Parses `a`, `bi`, `a+bi`, `a - bi` (spaces allowed, `i` or `j`).
pub fn parse_complex(s: &str) -> Result<Cplx> {
    let t: String = s.chars().filter(|c| !c.is_whitespace()).collect();
    let bad = || Error::Parse(format!("not a complex number: {s:?}"));
    if t.is_empty() {
        return Err(bad());
    }
    let num = |x: &str| -> Result<f64> {
        match x {
            "" | "+" => Ok(1.0),
            "-" => Ok(-1.0),
            _ => x.parse::<f64>().map_err(|_| bad()),
        }
    };
    let Some(body) = t.strip_suffix('i').or_else(|| t.strip_suffix('j')) else {
        return Ok(Cplx::new(t.parse::<f64>().map_err(|_| bad())?, 0.0));
    };
    let bytes = body.as_bytes();
    let split = (1..bytes.len())
        .rev()
        .find(|&k| (bytes[k] == b'+' || bytes[k] == b'-') && !matches!(bytes[k - 1], b'e' | b'E'));
    match split {
        Some(k) => Ok(Cplx::new(num(&body[..k])?, num(&body[k..])?)),
        None => Ok(Cplx::new(0.0, num(body)?)),
    }
}

/// One row of a root table.
#[derive(Clone, Debug, PartialEq)]
pub struct TableRow {
    pub n: usize,
    pub u: Vec<Cplx>,
    pub g: Vec<Cplx>,
    pub energy: f64,
    /// Whether an erratum line replaced a printed cell.
    pub corrected: bool,
}

impl TableRow {
    pub fn m(&self) -> usize {
        self.u.len()
    }

    pub fn roots(&self, eta: Cplx) -> Result<BetheRoots> {
        BetheRoots::new(self.u.clone(), self.g.clone(), eta)
    }
}

fn parse_cells(cells: &[&str]) -> Result<Vec<Cplx>> {
    cells.iter().filter(|c| **c != "-").map(|c| parse_complex(c)).collect()
}

/// Parses a root table for a chain of `n_sites` sites.
pub fn parse_root_table(text: &str, n_sites: usize) -> Result<Vec<TableRow>> {
    let mut rows = Vec::new();
    let mut errata = Vec::new();
    for (ln, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if let Some(rest) = line.strip_prefix("@erratum") {
            let (lhs, value) = rest
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("line {}: erratum needs '='", ln + 1)))?;
            let mut it = lhs.split_whitespace();
            let (Some(n), Some(cell), None) = (it.next(), it.next(), it.next()) else {
                return Err(Error::Parse(format!("line {}: erratum is '@erratum <n> <cell> = <value>'", ln + 1)));
            };
            let n: usize = n.parse().map_err(|_| Error::Parse(format!("line {}: bad row index", ln + 1)))?;
            errata.push((n, cell.to_string(), parse_complex(value)?));
            continue;
        }
        let cells: Vec<&str> = line.split('&').map(str::trim).collect();
        if cells.len() != 2 * n_sites + 2 {
            return Err(Error::Parse(format!(
                "line {}: expected {} cells, found {}",
                ln + 1,
                2 * n_sites + 2,
                cells.len()
            )));
        }
        let u = parse_cells(&cells[..n_sites])?;
        let g = parse_cells(&cells[n_sites..2 * n_sites])?;
        if u.len() != g.len() {
            return Err(Error::Parse(format!("line {}: unequal numbers of u and g roots", ln + 1)));
        }
        let energy = cells[2 * n_sites]
            .parse::<f64>()
            .map_err(|_| Error::Parse(format!("line {}: bad energy", ln + 1)))?;
        let n = cells[2 * n_sites + 1]
            .parse::<usize>()
            .map_err(|_| Error::Parse(format!("line {}: bad row index", ln + 1)))?;
        rows.push(TableRow { n, u, g, energy, corrected: false });
    }
    for (n, cell, value) in errata {
        let row = rows
            .iter_mut()
            .find(|r| r.n == n)
            .ok_or_else(|| Error::Parse(format!("erratum for missing row {n}")))?;
        let (kind, idx) = cell.split_at(1);
        let idx: usize = idx.parse().map_err(|_| Error::Parse(format!("bad erratum cell {cell}")))?;
        let target = match kind {
            "u" => &mut row.u,
            "g" => &mut row.g,
            _ => return Err(Error::Parse(format!("bad erratum cell {cell}"))),
        };
        let slot = idx
            .checked_sub(1)
            .and_then(|k| target.get_mut(k))
            .ok_or_else(|| Error::Parse(format!("erratum cell {cell} out of range")))?;
        *slot = value;
        row.corrected = true;
    }
    Ok(rows)
}

pub fn table1() -> Vec<TableRow> {
    parse_root_table(TABLE1, 2).expect("bundled table 1 parses")
}

pub fn table2() -> Vec<TableRow> {
    parse_root_table(TABLE2, 3).expect("bundled table 2 parses")
}

/// One row of the state table.
#[derive(Clone, Debug, PartialEq)]
pub struct StateRow {
    pub n: usize,
    pub energy: f64,
    /// The quoted order of magnitude of `‖HΨ − EΨ‖`.
    pub residual_order: f64,
    /// Nested components `F^{a2 a1}`, absent for the reference state.
    pub nested: Option<Vec<Cplx>>,
    pub psi: Vec<Cplx>,
}

fn parse_order(s: &str) -> Result<f64> {
    if let Some(e) = s.strip_prefix("10^{").and_then(|x| x.strip_suffix('}')) {
        let e: i32 = e.parse().map_err(|_| Error::Parse(format!("bad exponent in {s}")))?;
        return Ok(10f64.powi(e));
    }
    s.parse().map_err(|_| Error::Parse(format!("bad residual order {s}")))
}

pub fn parse_state_table(text: &str) -> Result<Vec<StateRow>> {
    let mut rows: Vec<StateRow> = Vec::new();
    for (ln, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .map(|(k, v)| (k.trim(), v.trim()))
            .ok_or_else(|| Error::Parse(format!("line {}: expected key = value", ln + 1)))?;
        if k == "n" {
            let n = v.parse().map_err(|_| Error::Parse(format!("line {}: bad row index", ln + 1)))?;
            rows.push(StateRow { n, energy: f64::NAN, residual_order: f64::NAN, nested: None, psi: Vec::new() });
            continue;
        }
        let row = rows
            .last_mut()
            .ok_or_else(|| Error::Parse(format!("line {}: '{k}' before the first 'n ='", ln + 1)))?;
        let list = |v: &str| v.split(',').map(parse_complex).collect::<Result<Vec<_>>>();
        match k {
            "E" => row.energy = v.parse().map_err(|_| Error::Parse(format!("line {}: bad energy", ln + 1)))?,
            "residual" => row.residual_order = parse_order(v)?,
            "F" => row.nested = if v == "-" { None } else { Some(list(v)?) },
            "psi" => row.psi = list(v)?,
            _ => return Err(Error::Parse(format!("line {}: unknown key '{k}'", ln + 1))),
        }
    }
    Ok(rows)
}

pub fn table3() -> Vec<StateRow> {
    parse_state_table(TABLE3).expect("bundled table 3 parses")
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(a: f64, b: f64) -> Cplx {
        Cplx::new(a, b)
    }

    #[test]
    fn complex_formats() {
        assert_eq!(parse_complex("0.1845 - 0.0000i").unwrap(), c(0.1845, -0.0));
        assert_eq!(parse_complex("0.0000 -45.1930i").unwrap(), c(0.0, -45.193));
        assert_eq!(parse_complex("-0.2+0.2548i").unwrap(), c(-0.2, 0.2548));
        assert_eq!(parse_complex("1").unwrap(), c(1.0, 0.0));
        assert_eq!(parse_complex("-i").unwrap(), c(0.0, -1.0));
        assert_eq!(parse_complex("2.5e-3+1e-2j").unwrap(), c(2.5e-3, 1e-2));
        assert_eq!(parse_complex("3.1i").unwrap(), c(0.0, 3.1));
        assert!(parse_complex("abc").is_err());
        assert!(parse_complex("").is_err());
    }

    #[test]
    fn bundled_tables() {
        let t1 = table1();
        assert_eq!(t1.len(), 9);
        assert_eq!(t1[0].u, vec![c(0.1845, 0.0), c(0.242, 0.0)]);
        assert_eq!(t1[2].m(), 0);
        let t2 = table2();
        assert_eq!(t2.len(), 27);
        assert_eq!(t2.iter().map(|r| r.n).collect::<Vec<_>>(), (1..=27).collect::<Vec<_>>());
        let r11 = &t2[10];
        assert!(r11.corrected && r11.u[0] == c(-0.1, 0.1929));
        assert_eq!(t2.iter().filter(|r| r.corrected).count(), 1);
        let t3 = table3();
        assert_eq!(t3.len(), 9);
        assert!(t3.iter().all(|r| r.psi.len() == 9));
        assert_eq!(t3[2].nested, None);
        assert_eq!(t3[0].residual_order, 1e-13);
        for (a, b) in t1.iter().zip(&t3) {
            assert_eq!(a.energy, b.energy);
            assert_eq!(b.nested.as_ref().map_or(0, Vec::len), if a.m() == 0 { 0 } else { 1 << a.m() });
        }
    }

    #[test]
    fn malformed_tables_are_rejected() {
        assert!(parse_root_table("1 & 2 & 3", 2).is_err());
        assert!(parse_root_table("- & - & 0.1 & - & 1.0 & 1", 2).is_err());
        assert!(parse_root_table("@erratum 4 u1 = 0.1\n- & - & - & - & 1.0 & 1", 2).is_err());
        assert!(parse_state_table("E = 1.0").is_err());
        assert!(parse_state_table("n = 1\nfoo = 2").is_err());
    }

    proptest! {
        #[test]
        fn complex_round_trip(a in -1e3f64..1e3, b in -1e3f64..1e3) {
            let s = format!("{a}{}{}i", if b < 0.0 { "-" } else { "+" }, b.abs());
            prop_assert_eq!(parse_complex(&s).unwrap(), c(a, b));
        }
    }
}

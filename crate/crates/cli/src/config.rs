//! Run configuration: `key = value` lines, `#` comments, complex values as
//! `a+bi`, lists comma-separated. Unset model keys fall back to the
//! reference-table parameter set on two sites.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use su3_bethe::boundary::{BoundarySide, ModelParams};
use su3_bethe::tables::{parse_complex, table_params};
use su3_bethe::{Cplx, Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct Options {
    /// Samples per algebraic identity.
    pub samples: usize,
    /// Random `(u, v)` pairs for commutativity.
    pub pairs: usize,
    pub seed: u64,
    pub tol_algebraic: f64,
    pub tol_commutativity: f64,
    pub tol_origin: f64,
    pub tol_vacuum: f64,
    pub tol_energy: f64,
    pub tol_bae: f64,
    pub tol_state: f64,
    pub tol_transfer: f64,
    pub tol_ed: f64,
    pub tol_reference: f64,
    pub grid_points: usize,
    pub seeds_per_m: usize,
    pub grid_seed: u64,
    /// Table row whose roots seed `state`.
    pub row: Option<usize>,
    /// Tables regenerated by `reproduce`.
    pub tables: Vec<usize>,
}

impl Default for Options {
    fn default() -> Self {
        Options {
            samples: 100,
            pairs: 20,
            seed: 2024,
            tol_algebraic: 1e-12,
            tol_commutativity: 1e-10,
            tol_origin: 1e-11,
            tol_vacuum: 1e-11,
            tol_energy: 1e-9,
            tol_bae: 1e-10,
            tol_state: 1e-9,
            tol_transfer: 1e-8,
            tol_ed: 1e-6,
            tol_reference: 1e-3,
            grid_points: 13,
            seeds_per_m: 200,
            grid_seed: 1,
            row: None,
            tables: vec![1, 2, 3],
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub params: ModelParams,
    /// Offset added to the derived `c2` of the right boundary. Nonzero
    /// values break the reflection equation on purpose.
    pub c2_minus_shift: Cplx,
    pub options: Options,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig { params: table_params(2), c2_minus_shift: Cplx::new(0.0, 0.0), options: Options::default() }
    }
}

fn err(line: usize, msg: impl std::fmt::Display) -> Error {
    Error::Parse(format!("config line {line}: {msg}"))
}

fn complex(line: usize, v: &str) -> Result<Cplx> {
    let z = parse_complex(v).map_err(|e| err(line, e))?;
    if !z.is_finite() {
        return Err(err(line, format!("non-finite value {v:?}")));
    }
    Ok(z)
}

fn float(line: usize, v: &str) -> Result<f64> {
    match v.parse::<f64>() {
        Ok(x) if x.is_finite() && x >= 0.0 => Ok(x),
        _ => Err(err(line, format!("expected a nonnegative number, got {v:?}"))),
    }
}

fn int<T: std::str::FromStr>(line: usize, v: &str) -> Result<T> {
    v.parse().map_err(|_| err(line, format!("expected an integer, got {v:?}")))
}

/// Writes `z` in the `a+bi` form accepted by the parser.
pub fn format_complex(z: Cplx) -> String {
    format!("{}{:+}i", z.re, z.im)
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<RunConfig> {
        let d = table_params(2);
        let (mut eta, mut n, mut theta) = (d.eta, None::<usize>, None::<Vec<Cplx>>);
        let (mut zm, mut cm, mut c1m) = (d.minus.zeta, d.minus.c, d.minus.c1);
        let (mut zp, mut cp, mut c1p) = (d.plus.zeta, d.plus.c, d.plus.c1);
        let mut shift = Cplx::new(0.0, 0.0);
        let mut o = Options::default();
        let mut seen = BTreeSet::new();
        for (k, raw) in text.lines().enumerate() {
            let ln = k + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, v) = line.split_once('=').ok_or_else(|| err(ln, "expected key = value"))?;
            let (key, v) = (key.trim(), v.trim());
            if !seen.insert(key.to_string()) {
                return Err(err(ln, format!("duplicate key '{key}'")));
            }
            match key {
                "eta" => eta = complex(ln, v)?,
                "n" => n = Some(int(ln, v)?),
                "theta" => {
                    theta = Some(if v.is_empty() {
                        Vec::new()
                    } else {
                        v.split(',').map(|x| complex(ln, x)).collect::<Result<_>>()?
                    })
                }
                "zeta_minus" => zm = complex(ln, v)?,
                "c_minus" => cm = complex(ln, v)?,
                "c1_minus" => c1m = complex(ln, v)?,
                "zeta_plus" => zp = complex(ln, v)?,
                "c_plus" => cp = complex(ln, v)?,
                "c1_plus" => c1p = complex(ln, v)?,
                "c2_minus_shift" => shift = complex(ln, v)?,
                "samples" => o.samples = int(ln, v)?,
                "pairs" => o.pairs = int(ln, v)?,
                "seed" => o.seed = int(ln, v)?,
                "tol_algebraic" => o.tol_algebraic = float(ln, v)?,
                "tol_commutativity" => o.tol_commutativity = float(ln, v)?,
                "tol_origin" => o.tol_origin = float(ln, v)?,
                "tol_vacuum" => o.tol_vacuum = float(ln, v)?,
                "tol_energy" => o.tol_energy = float(ln, v)?,
                "tol_bae" => o.tol_bae = float(ln, v)?,
                "tol_state" => o.tol_state = float(ln, v)?,
                "tol_transfer" => o.tol_transfer = float(ln, v)?,
                "tol_ed" => o.tol_ed = float(ln, v)?,
                "tol_reference" => o.tol_reference = float(ln, v)?,
                "grid_points" => o.grid_points = int(ln, v)?,
                "seeds_per_m" => o.seeds_per_m = int(ln, v)?,
                "grid_seed" => o.grid_seed = int(ln, v)?,
                "row" => o.row = Some(int(ln, v)?),
                "tables" => {
                    o.tables = v.split(',').map(|x| int(ln, x.trim())).collect::<Result<_>>()?;
                    if o.tables.is_empty() || o.tables.iter().any(|t| !(1..=3).contains(t)) {
                        return Err(err(ln, "tables must list values from 1, 2, 3"));
                    }
                }
                _ => return Err(err(ln, format!("unknown key '{key}'"))),
            }
        }
        let theta = match (n, theta) {
            (Some(n), Some(t)) if t.len() != n => {
                return Err(Error::Parse(format!("config: n = {n} but theta has {} entries", t.len())))
            }
            (_, Some(t)) => t,
            (Some(n), None) => vec![Cplx::new(0.0, 0.0); n],
            (None, None) => d.theta,
        };
        if theta.is_empty() {
            return Err(Error::Parse("config: the chain needs at least one site".into()));
        }
        let mut minus = BoundarySide::new(zm, cm, c1m)?;
        minus.c2 += shift;
        let plus = BoundarySide::new(zp, cp, c1p)?;
        Ok(RunConfig { params: ModelParams::new(eta, minus, plus, theta), c2_minus_shift: shift, options: o })
    }

    /// Config text that parses back to `self`.
    pub fn to_text(&self) -> String {
        let p = &self.params;
        let c = format_complex;
        let mut s = String::new();
        let theta: Vec<String> = p.theta.iter().map(|&t| c(t)).collect();
        let _ = writeln!(s, "eta = {}", c(p.eta));
        let _ = writeln!(s, "n = {}", p.n_sites());
        let _ = writeln!(s, "theta = {}", theta.join(", "));
        let _ = writeln!(s, "zeta_minus = {}", c(p.minus.zeta));
        let _ = writeln!(s, "c_minus = {}", c(p.minus.c));
        let _ = writeln!(s, "c1_minus = {}", c(p.minus.c1));
        let _ = writeln!(s, "zeta_plus = {}", c(p.plus.zeta));
        let _ = writeln!(s, "c_plus = {}", c(p.plus.c));
        let _ = writeln!(s, "c1_plus = {}", c(p.plus.c1));
        let _ = writeln!(s, "c2_minus_shift = {}", c(self.c2_minus_shift));
        for (k, v) in self.option_entries() {
            let _ = writeln!(s, "{k} = {v}");
        }
        s
    }

    /// Options as `(key, value)` text pairs; `row` only when set.
    pub fn option_entries(&self) -> Vec<(&'static str, String)> {
        let o = &self.options;
        let mut v = vec![
            ("samples", o.samples.to_string()),
            ("pairs", o.pairs.to_string()),
            ("seed", o.seed.to_string()),
            ("tol_algebraic", o.tol_algebraic.to_string()),
            ("tol_commutativity", o.tol_commutativity.to_string()),
            ("tol_origin", o.tol_origin.to_string()),
            ("tol_vacuum", o.tol_vacuum.to_string()),
            ("tol_energy", o.tol_energy.to_string()),
            ("tol_bae", o.tol_bae.to_string()),
            ("tol_state", o.tol_state.to_string()),
            ("tol_transfer", o.tol_transfer.to_string()),
            ("tol_ed", o.tol_ed.to_string()),
            ("tol_reference", o.tol_reference.to_string()),
            ("grid_points", o.grid_points.to_string()),
            ("seeds_per_m", o.seeds_per_m.to_string()),
            ("grid_seed", o.grid_seed.to_string()),
            ("tables", o.tables.iter().map(|t| t.to_string()).collect::<Vec<_>>().join(", ")),
        ];
        if let Some(r) = o.row {
            v.push(("row", r.to_string()));
        }
        v
    }
}

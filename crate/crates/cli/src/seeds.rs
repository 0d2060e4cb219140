//! Seed files: one root set per line, `M; u1, …, uM; g1, …, gM`, with an
//! optional fourth field holding the expected energy. Seeds carrying an
//! expected energy are required to reproduce it.

use su3_bethe::bae::BetheRoots;
use su3_bethe::tables::parse_complex;
use su3_bethe::{Cplx, Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct Seed {
    /// 1-based line in the seed file.
    pub line: usize,
    pub roots: BetheRoots,
    pub expected_energy: Option<f64>,
}

fn list(line: usize, field: &str) -> Result<Vec<Cplx>> {
    let field = field.trim();
    if field.is_empty() {
        return Ok(Vec::new());
    }
    field
        .split(',')
        .map(|x| parse_complex(x).map_err(|e| Error::Parse(format!("seed line {line}: {e}"))))
        .collect()
}

pub fn parse_seeds(text: &str, eta: Cplx) -> Result<Vec<Seed>> {
    let mut out = Vec::new();
    for (k, raw) in text.lines().enumerate() {
        let ln = k + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(';').collect();
        if !(3..=4).contains(&fields.len()) {
            return Err(Error::Parse(format!("seed line {ln}: expected 'M; u; g' with an optional '; E'")));
        }
        let m: usize = fields[0]
            .trim()
            .parse()
            .map_err(|_| Error::Parse(format!("seed line {ln}: bad root count {:?}", fields[0].trim())))?;
        let (u, g) = (list(ln, fields[1])?, list(ln, fields[2])?);
        if u.len() != m || g.len() != m {
            return Err(Error::Parse(format!(
                "seed line {ln}: M = {m} but {} u and {} g roots given",
                u.len(),
                g.len()
            )));
        }
        let expected_energy = match fields.get(3).map(|s| s.trim()) {
            None | Some("") => None,
            Some(e) => Some(e.parse::<f64>().map_err(|_| Error::Parse(format!("seed line {ln}: bad energy {e:?}")))?),
        };
        let roots = BetheRoots::new(u, g, eta).map_err(|e| Error::Parse(format!("seed line {ln}: {e}")))?;
        out.push(Seed { line: ln, roots, expected_energy });
    }
    Ok(out)
}

//! Browser bindings: exact spectrum, refinement of one Bethe root set, and
//! the Bethe eigenstate of a root set, each returned as a JSON string.
//! Only single-threaded library paths are used, since `wasm32` has no threads.

use serde_json::{json, Value};
use su3_bethe::bae::{newton_refine, BetheRoots, NewtonConfig, NewtonOutcome};
use su3_bethe::bethe::{bethe_state, eigen_residual, TABLE_PAIRING};
use su3_bethe::boundary::{gauge_params, BoundarySide, GaugeParams, ModelParams};
use su3_bethe::chain::spectrum;
use su3_bethe::linalg::collinearity_defect;
use su3_bethe::tables::parse_complex;
use su3_bethe::Cplx;
use wasm_bindgen::prelude::*;

/// Largest chain the page accepts; `3^N` grows quickly.
pub const MAX_SITES: usize = 4;

fn cjson(z: Cplx) -> Value {
    json!({ "re": z.re, "im": z.im })
}

fn parse(field: &str, s: &str) -> Result<Cplx, String> {
    parse_complex(s).map_err(|e| format!("{field}: {e}"))
}

fn parse_list(field: &str, s: &str) -> Result<Vec<Cplx>, String> {
    if s.trim().is_empty() {
        return Ok(Vec::new());
    }
    s.split(',').map(|x| parse(field, x)).collect()
}

#[wasm_bindgen]
pub struct Model {
    params: ModelParams,
}

impl Model {
    /// Homogeneous chain of `n` sites; every other argument is a complex
    /// number in `a+bi` form.
    #[allow(clippy::too_many_arguments)]
    pub fn build(
        n: usize,
        eta: &str,
        zeta_minus: &str,
        c_minus: &str,
        c1_minus: &str,
        zeta_plus: &str,
        c_plus: &str,
        c1_plus: &str,
    ) -> Result<Model, String> {
        if !(1..=MAX_SITES).contains(&n) {
            return Err(format!("N must lie in 1..={MAX_SITES}"));
        }
        let minus = BoundarySide::new(parse("zeta", zeta_minus)?, parse("c", c_minus)?, parse("c1", c1_minus)?)
            .map_err(|e| e.to_string())?;
        let plus = BoundarySide::new(parse("zeta'", zeta_plus)?, parse("c'", c_plus)?, parse("c1'", c1_plus)?)
            .map_err(|e| e.to_string())?;
        let params = ModelParams::new(parse("eta", eta)?, minus, plus, vec![Cplx::new(0.0, 0.0); n]);
        if !params.all_finite() {
            return Err("parameters must be finite".into());
        }
        Ok(Model { params })
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    /// ED energies sorted by real part.
    pub fn spectrum_json(&self) -> Result<String, String> {
        let levels = spectrum(&self.params).map_err(|e| e.to_string())?;
        let energies: Vec<Value> = levels.iter().map(|l| cjson(l.energy)).collect();
        Ok(json!({ "energies": energies }).to_string())
    }

    fn refine(&self, u: &str, g: &str) -> Result<(NewtonOutcome, GaugeParams), String> {
        let seed = BetheRoots::new(parse_list("u", u)?, parse_list("g", g)?, self.params.eta).map_err(|e| e.to_string())?;
        let gp = gauge_params(&self.params, seed.m()).map_err(|e| e.to_string())?;
        let out = newton_refine(&seed, &self.params, &gp, &NewtonConfig::default()).map_err(|e| e.to_string())?;
        Ok((out, gp))
    }

    /// Newton refinement of one seed, its energy, and the nearest ED level.
    pub fn solve_json(&self, u: &str, g: &str) -> Result<String, String> {
        let (out, gp) = self.refine(u, g)?;
        let energy = if out.is_solution() {
            Some(su3_bethe::tq::energy(&out.roots, &self.params, &gp).map_err(|e| e.to_string())?)
        } else {
            None
        };
        let nearest = match energy {
            Some(e) => {
                let levels = spectrum(&self.params).map_err(|e| e.to_string())?;
                levels.iter().map(|l| (l.energy - e).norm()).min_by(f64::total_cmp)
            }
            None => None,
        };
        Ok(json!({
            "converged": out.is_solution(),
            "status": format!("{:?}", out.status),
            "iterations": out.iterations,
            "residual": out.residual,
            "u": out.roots.u_roots.iter().map(|&z| cjson(z)).collect::<Vec<_>>(),
            "g": out.roots.g_roots.iter().map(|&z| cjson(z)).collect::<Vec<_>>(),
            "energy": energy.map(cjson),
            "ed_distance": nearest,
        })
        .to_string())
    }

    /// Bethe eigenstate of the refined seed with its residuals.
    pub fn state_json(&self, u: &str, g: &str) -> Result<String, String> {
        let (out, gp) = self.refine(u, g)?;
        if !out.is_solution() {
            return Err(format!("seed did not converge ({:?}, residual {:.2e})", out.status, out.residual));
        }
        let (_, psi) = bethe_state(&out.roots, &self.params, TABLE_PAIRING).map_err(|e| e.to_string())?;
        let res = eigen_residual(&psi, &out.roots, &self.params, &gp).map_err(|e| e.to_string())?;
        let energy = res.energy.unwrap_or(Cplx::new(f64::NAN, 0.0));
        let levels = spectrum(&self.params).map_err(|e| e.to_string())?;
        let ed = levels
            .iter()
            .min_by(|a, b| (a.energy - energy).norm().total_cmp(&(b.energy - energy).norm()))
            .map(|l| collinearity_defect(&l.vector, &psi));
        Ok(json!({
            "energy": cjson(energy),
            "h_residual": res.h_residual,
            "t_residual": res.max_t_residual(),
            "ed_collinearity": ed,
            "psi": psi.iter().map(|&z| cjson(z)).collect::<Vec<_>>(),
        })
        .to_string())
    }
}

#[wasm_bindgen]
impl Model {
    #[wasm_bindgen(constructor)]
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        n: usize,
        eta: &str,
        zeta_minus: &str,
        c_minus: &str,
        c1_minus: &str,
        zeta_plus: &str,
        c_plus: &str,
        c1_plus: &str,
    ) -> Result<Model, JsError> {
        Model::build(n, eta, zeta_minus, c_minus, c1_minus, zeta_plus, c_plus, c1_plus).map_err(|e| JsError::new(&e))
    }

    pub fn spectrum(&self) -> Result<String, JsError> {
        self.spectrum_json().map_err(|e| JsError::new(&e))
    }

    pub fn solve(&self, u: &str, g: &str) -> Result<String, JsError> {
        self.solve_json(u, g).map_err(|e| JsError::new(&e))
    }

    pub fn state(&self, u: &str, g: &str) -> Result<String, JsError> {
        self.state_json(u, g).map_err(|e| JsError::new(&e))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use su3_bethe::tables::table_params;

    fn table_model(n: usize) -> Model {
        Model::build(n, "0.2", "0.1", "1", "-0.3", "-0.4", "-0.3", "-0.7").unwrap()
    }

    #[test]
    fn builds_the_table_parameters() {
        assert_eq!(table_model(2).params(), &table_params(2));
    }

    #[test]
    fn rejects_bad_input() {
        assert!(Model::build(0, "0.2", "0.1", "1", "-0.3", "-0.4", "-0.3", "-0.7").is_err());
        assert!(Model::build(2, "x", "0.1", "1", "-0.3", "-0.4", "-0.3", "-0.7").is_err());
        assert!(Model::build(2, "0.2", "0.1", "1", "0", "-0.4", "-0.3", "-0.7").is_err());
        assert!(table_model(2).solve_json("0.1", "").is_err());
    }

    #[test]
    fn spectrum_has_nine_levels() {
        let v: Value = serde_json::from_str(&table_model(2).spectrum_json().unwrap()).unwrap();
        let e = v["energies"].as_array().unwrap();
        assert_eq!(e.len(), 9);
        assert!((e[8]["re"].as_f64().unwrap() - 5.3807982858).abs() < 1e-9);
    }

    #[test]
    fn solve_and_state_of_the_top_level() {
        let m = table_model(2);
        let v: Value = serde_json::from_str(&m.solve_json("0.1845, 0.2420", "0.1783, 0.2603").unwrap()).unwrap();
        assert_eq!(v["converged"], Value::Bool(true));
        assert!((v["energy"]["re"].as_f64().unwrap() - 5.3807982858).abs() < 1e-9);
        assert!(v["ed_distance"].as_f64().unwrap() < 1e-8);
        let s: Value = serde_json::from_str(&m.state_json("0.1845, 0.2420", "0.1783, 0.2603").unwrap()).unwrap();
        assert!(s["h_residual"].as_f64().unwrap() < 1e-9);
        assert!(s["ed_collinearity"].as_f64().unwrap() < 1e-6);
        assert_eq!(s["psi"].as_array().unwrap().len(), 9);
    }
}

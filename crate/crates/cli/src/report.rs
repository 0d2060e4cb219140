//! Reports: checks plus command-specific sections, rendered as canonical
//! JSON (sorted keys) or as CSV of the command's main table.

use std::collections::BTreeMap;

use serde_json::{json, Value};
use su3_bethe::suite::Check;
use su3_bethe::Cplx;

/// Shortest round-trip text of `x` in scientific notation.
pub fn num(x: f64) -> String {
    format!("{x:e}")
}

pub fn cjson(z: Cplx) -> Value {
    json!({ "re": z.re, "im": z.im })
}

pub fn cjson_list(zs: &[Cplx]) -> Value {
    Value::Array(zs.iter().map(|&z| cjson(z)).collect())
}

/// Rows written by `--format csv`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Table { header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        self.rows.push(row);
    }
}

#[derive(Clone, Debug)]
pub struct Report {
    pub command: String,
    pub config: Value,
    pub checks: Vec<Check>,
    pub sections: BTreeMap<String, Value>,
    /// Main table for CSV output; the checks when absent.
    pub table: Option<Table>,
    pub wall_time: f64,
}

impl Report {
    pub fn new(command: &str, config: Value) -> Self {
        Report { command: command.into(), config, checks: Vec::new(), sections: BTreeMap::new(), table: None, wall_time: 0.0 }
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(Check::passed)
    }

    pub fn failed_checks(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed())
    }

    /// Replaces every threshold by `tol`.
    pub fn override_thresholds(&mut self, tol: f64) {
        for c in &mut self.checks {
            c.threshold = tol;
        }
    }

    pub fn to_json(&self) -> Value {
        let checks: Vec<Value> = self
            .checks
            .iter()
            .map(|c| json!({ "name": c.name, "residual": c.residual, "threshold": c.threshold, "pass": c.passed() }))
            .collect();
        let mut root = serde_json::Map::new();
        for (k, v) in &self.sections {
            root.insert(k.clone(), v.clone());
        }
        root.insert("command".into(), json!(self.command));
        root.insert("config".into(), self.config.clone());
        root.insert("checks".into(), Value::Array(checks));
        root.insert("pass".into(), json!(self.passed()));
        root.insert("wall_time_s".into(), json!(self.wall_time));
        Value::Object(root)
    }

    pub fn render_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(&self.to_json()).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn checks_table(&self) -> Table {
        let mut t = Table::new(&["name", "residual", "threshold", "pass"]);
        for c in &self.checks {
            t.push(vec![c.name.clone(), num(c.residual), num(c.threshold), c.passed().to_string()]);
        }
        t
    }

    pub fn render_csv(&self) -> Result<String, csv::Error> {
        let table = self.table.clone().unwrap_or_else(|| self.checks_table());
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&table.header)?;
        for r in &table.rows {
            w.write_record(r)?;
        }
        let bytes = w.into_inner().map_err(|e| e.into_error())?;
        Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Report {
        let mut r = Report::new("verify", json!({ "eta": cjson(Cplx::new(0.2, 0.0)) }));
        r.checks.push(Check::new("ybe", 3.1e-15, 1e-12));
        r.checks.push(Check::new("nan", f64::NAN, 1.0));
        r.sections.insert("levels".into(), cjson_list(&[Cplx::new(1.0 / 3.0, -0.1)]));
        r.wall_time = 0.25;
        r
    }

    #[test]
    fn json_keys_are_sorted_and_round_trip() {
        let s = sample().render_json();
        let v: Value = serde_json::from_str(&s).unwrap();
        let keys: Vec<&String> = v.as_object().unwrap().keys().collect();
        let mut sorted = keys.clone();
        sorted.sort();
        assert_eq!(keys, sorted);
        let again = format!("{}\n", serde_json::to_string_pretty(&v).unwrap());
        assert_eq!(s, again);
        assert_eq!(v["checks"][1]["residual"], Value::Null);
        assert_eq!(v["pass"], json!(false));
    }

    proptest::proptest! {
        #[test]
        fn arbitrary_residuals_round_trip(xs in proptest::collection::vec(proptest::num::f64::ANY, 1..8)) {
            let mut r = sample();
            r.checks = xs.iter().enumerate().map(|(k, &x)| Check::new(format!("c{k}"), x, 1.0)).collect();
            let s = r.render_json();
            let v: Value = serde_json::from_str(&s).unwrap();
            proptest::prop_assert_eq!(format!("{}\n", serde_json::to_string_pretty(&v).unwrap()), s);
        }
    }

    #[test]
    fn overall_pass_is_the_conjunction() {
        let mut r = sample();
        r.checks.pop();
        assert!(r.passed());
        r.override_thresholds(1e-16);
        assert!(!r.passed());
    }

    #[test]
    fn csv_defaults_to_checks() {
        let csv = sample().render_csv().unwrap();
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some("name,residual,threshold,pass"));
        assert_eq!(lines.next(), Some("ybe,3.1e-15,1e-12,true"));
    }
}

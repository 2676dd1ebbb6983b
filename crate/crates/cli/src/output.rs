//! Deterministic result reporting: check lines on stdout, RFC-4180 CSV,
//! and JSON with stable key order.
//!
//! Every command produces a `RunOutput`: a list of named checks, a JSON
//! result object, and optionally a CSV table. `serde_json` maps preserve
//! sorted key order by default, so serializing the same results twice
//! yields byte-identical files. CSV fields are quoted only when they
//! contain a comma, quote, or newline, and rows end in a bare LF.

use std::fs;
use std::path::Path;

use serde_json::{json, Map, Value};

use crate::config::ExperimentConfig;

/// Outcome of one command: named pass/fail checks plus machine-readable
/// results.
pub struct RunOutput {
    pub checks: Vec<Check>,
    pub results: Value,
    pub csv: Option<String>,
}

/// One named verification with a human-readable detail string.
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

impl RunOutput {
    pub fn new(results: Value) -> Self {
        Self { checks: Vec::new(), results, csv: None }
    }

    pub fn check(&mut self, name: &str, pass: bool, detail: String) {
        self.checks.push(Check { name: name.to_string(), pass, detail });
    }

    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }
}

/// Quote one CSV field per RFC 4180: wrap in quotes when it contains a
/// comma, quote, CR, or LF, doubling interior quotes.
pub fn csv_field(field: &str) -> String {
    if field.contains([',', '"', '\r', '\n']) {
        format!("\"{}\"", field.replace('"', "\"\""))
    } else {
        field.to_string()
    }
}

/// Join fields into one CSV row (LF-terminated by the caller's join).
pub fn csv_row(fields: &[String]) -> String {
    fields.iter().map(|f| csv_field(f)).collect::<Vec<_>>().join(",")
}

/// Build a CSV body from a header and rows, LF line endings throughout.
pub fn csv_table(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut out = csv_row(&header.iter().map(|s| s.to_string()).collect::<Vec<_>>());
    out.push('\n');
    for row in rows {
        out.push_str(&csv_row(row));
        out.push('\n');
    }
    out
}

/// The provenance block embedded in every JSON result.
pub fn manifest(cfg: &ExperimentConfig) -> Value {
    json!({
        "config_hash": cfg.config_hash(),
        "seed": cfg.seed,
        "version": env!("CARGO_PKG_VERSION"),
    })
}

/// Assemble the final JSON document: manifest + checks + results, keys
/// sorted by the default map representation.
pub fn final_json(cfg: &ExperimentConfig, run: &RunOutput) -> Value {
    let checks: Vec<Value> = run
        .checks
        .iter()
        .map(|c| {
            let mut m = Map::new();
            m.insert("detail".into(), Value::String(c.detail.clone()));
            m.insert("name".into(), Value::String(c.name.clone()));
            m.insert("pass".into(), Value::Bool(c.pass));
            Value::Object(m)
        })
        .collect();
    json!({
        "checks": checks,
        "experiment": cfg.experiment,
        "manifest": manifest(cfg),
        "pass": run.all_passed(),
        "results": run.results,
    })
}

/// Print check lines and the manifest to stdout, and write
/// `<out>/<experiment>.{csv,json}` when an output directory is set.
pub fn emit(cfg: &ExperimentConfig, run: &RunOutput) -> Result<(), String> {
    for c in &run.checks {
        let status = if c.pass { "PASS" } else { "FAIL" };
        println!("{status} {}: {}", c.name, c.detail);
    }
    let doc = final_json(cfg, run);
    println!(
        "manifest config_hash={} seed={} version={}",
        doc["manifest"]["config_hash"].as_str().unwrap_or("?"),
        cfg.seed,
        env!("CARGO_PKG_VERSION"),
    );
    if let Some(dir) = &cfg.out {
        fs::create_dir_all(dir).map_err(|e| format!("create {}: {e}", dir.display()))?;
        let json_path = dir.join(format!("{}.json", cfg.experiment));
        let body = serde_json::to_string_pretty(&doc).map_err(|e| e.to_string())?;
        write_file(&json_path, &(body + "\n"))?;
        if let Some(csv) = &run.csv {
            let csv_path = dir.join(format!("{}.csv", cfg.experiment));
            write_file(&csv_path, csv)?;
        }
    }
    Ok(())
}

fn write_file(path: &Path, body: &str) -> Result<(), String> {
    fs::write(path, body).map_err(|e| format!("write {}: {e}", path.display()))
}

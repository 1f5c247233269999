use std::io::Write;

use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{Format, RunConfig};
use crate::CliError;

/// A command's result in both output shapes.
pub struct Emission {
    pub result: Value,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
    /// False when a check or suite failed.
    pub passed: bool,
}

impl Emission {
    pub fn new<S: AsRef<str>>(result: impl Serialize, columns: &[S], passed: bool) -> Result<Self, CliError> {
        Ok(Emission {
            result: serde_json::to_value(result).map_err(|e| CliError::Internal(e.to_string()))?,
            columns: columns.iter().map(|s| s.as_ref().to_string()).collect(),
            rows: Vec::new(),
            passed,
        })
    }

    pub fn row(&mut self, cells: Vec<String>) {
        debug_assert_eq!(cells.len(), self.columns.len());
        self.rows.push(cells);
    }
}

fn header(cfg: &RunConfig) -> Value {
    json!({
        "tool": "rus",
        "version": env!("CARGO_PKG_VERSION"),
        "seed": cfg.seed,
        "config": cfg,
    })
}

pub fn render(cfg: &RunConfig, e: &Emission) -> Result<Vec<u8>, CliError> {
    let internal = |e: &dyn std::fmt::Display| CliError::Internal(e.to_string());
    match cfg.format {
        Format::Json => {
            let doc = json!({ "header": header(cfg), "passed": e.passed, "result": e.result });
            let mut out = serde_json::to_vec_pretty(&doc).map_err(|e| internal(&e))?;
            out.push(b'\n');
            Ok(out)
        }
        Format::Csv => {
            let mut out = Vec::new();
            let config = serde_json::to_string(cfg).map_err(|e| internal(&e))?;
            writeln!(out, "# tool: rus {}", env!("CARGO_PKG_VERSION")).map_err(|e| internal(&e))?;
            writeln!(out, "# seed: {}", cfg.seed).map_err(|e| internal(&e))?;
            writeln!(out, "# config: {config}").map_err(|e| internal(&e))?;
            writeln!(out, "# passed: {}", e.passed).map_err(|e| internal(&e))?;
            let mut w = csv::Writer::from_writer(out);
            w.write_record(&e.columns).map_err(|e| internal(&e))?;
            for r in &e.rows {
                w.write_record(r).map_err(|e| internal(&e))?;
            }
            w.into_inner().map_err(|e| internal(&e))
        }
    }
}

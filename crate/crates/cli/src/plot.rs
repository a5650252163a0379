//! Plot-data tables written as CSV or versioned JSON.

use std::path::Path;
use std::str::FromStr;

use serde_json::{json, Value};

use povm_coherence::experiment::{Fig2Row, SweepRow};

use crate::error::{CliError, Result};
use crate::io::emit_text;

pub const SCHEMA: &str = "povm-coherence/v1";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

impl FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            _ => Err(format!("unknown format `{s}` (expected csv or json)")),
        }
    }
}

impl Format {
    /// `.json` selects JSON; anything else is CSV.
    pub fn from_path(path: Option<&Path>) -> Self {
        match path.and_then(|p| p.extension()).and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("json") => Format::Json,
            _ => Format::Csv,
        }
    }
}

/// Named columns of optional numbers; `None` is an empty CSV cell or JSON `null`.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub kind: &'static str,
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Option<f64>>>,
}

impl Table {
    pub fn sweep(rows: &[SweepRow]) -> Self {
        Self {
            kind: "sweep",
            columns: vec!["parameter", "theory", "mean", "std", "ratio"],
            rows: rows
                .iter()
                .map(|r| vec![Some(r.parameter), Some(r.theory), Some(r.mean), Some(r.std), r.ratio])
                .collect(),
        }
    }

    pub fn fig2(rows: &[Fig2Row]) -> Self {
        Self {
            kind: "fig2",
            columns: vec!["gamma", "rc", "gap", "clinf", "cl1half"],
            rows: rows
                .iter()
                .map(|r| vec![Some(r.gamma), Some(r.rc), Some(r.gap), Some(r.clinf), Some(r.cl1half)])
                .collect(),
        }
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(Vec::new());
        w.write_record(&self.columns)?;
        for row in &self.rows {
            w.write_record(row.iter().map(|v| v.map(cell).unwrap_or_default()))?;
        }
        let bytes = w.into_inner().map_err(|e| CliError::Csv(e.into_error().into()))?;
        Ok(String::from_utf8(bytes).expect("ascii"))
    }

    pub fn to_json(&self) -> Value {
        json!({
            "schema": SCHEMA,
            "kind": self.kind,
            "columns": self.columns,
            "rows": self.rows,
        })
    }
}

/// Shortest text that parses back to the same `f64`.
fn cell(x: f64) -> String {
    format!("{x:?}")
}

/// Writes a nonempty table to `path` (stdout when `None`).
pub fn emit_plot_data(table: &Table, format: Format, path: Option<&Path>) -> Result<()> {
    if table.rows.is_empty() {
        return Err(CliError::usage(format!("refusing to write an empty {} table", table.kind)));
    }
    let text = match format {
        Format::Csv => table.to_csv()?,
        Format::Json => crate::io::to_pretty(&table.to_json()),
    };
    emit_text(path, &text)
}

//! Tabular and JSON output. Numbers are written as decimal strings so no
//! binary-float rounding sneaks in between the engine and the consumer.

use std::io::Write;

use rug::Float;
use serde_json::{json, Map, Value};
use thiserror::Error;

use crate::circuit::InterferometerParams;
use crate::metrology::{LodiReport, MetrologyReport};
use crate::scalar::{real_to_decimal, BigComplex};

pub const ENGINE_NAME: &str = env!("CARGO_PKG_NAME");
pub const ENGINE_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("row {row} has {got} cells, header has {want}")]
    RowWidth { row: usize, got: usize, want: usize },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    /// Exact parameter value as supplied.
    Param(f64),
    /// Computed quantity, written with the table's digit count.
    Real(Float),
    Text(String),
    Empty,
}

impl Cell {
    pub fn render(&self, digits: u32) -> String {
        match self {
            Cell::Param(x) => format_param(*x),
            Cell::Real(x) => real_to_decimal(x, digits),
            Cell::Text(s) => s.clone(),
            Cell::Empty => String::new(),
        }
    }
}

/// Shortest decimal that round-trips the f64.
pub fn format_param(x: f64) -> String {
    if x == 0.0 {
        "0".to_string()
    } else {
        format!("{x:?}")
    }
}

/// Header plus rows, in a fixed order.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
    /// Significant digits for computed cells.
    pub digits: u32,
}

impl Table {
    pub fn new(columns: Vec<String>, digits: u32) -> Self {
        Table { columns, rows: Vec::new(), digits }
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), ReportError> {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::CRLF).from_writer(out);
        w.write_record(&self.columns)?;
        for (i, row) in self.rows.iter().enumerate() {
            if row.len() != self.columns.len() {
                return Err(ReportError::RowWidth { row: i, got: row.len(), want: self.columns.len() });
            }
            w.write_record(row.iter().map(|c| c.render(self.digits)))?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> Result<String, ReportError> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        Ok(String::from_utf8(buf).expect("csv output is UTF-8"))
    }
}

pub fn params_json(p: &InterferometerParams) -> Value {
    let mut m = Map::new();
    for (name, value) in p.named_values() {
        m.insert(name.to_string(), Value::String(format_param(value)));
    }
    m.insert("arms".into(), Value::String(p.arms.to_string()));
    m.insert("precision".into(), Value::from(p.precision.digits()));
    Value::Object(m)
}

fn complex_json(z: &BigComplex, digits: u32) -> Value {
    let (re, im) = z.to_decimal(digits);
    json!({ "re": re, "im": im })
}

pub fn metrology_json(r: &MetrologyReport, digits: u32) -> Value {
    json!({
        "circuit": r.circuit.name(),
        "source": r.source.to_string(),
        "mean_j": complex_json(&r.mean_j, digits),
        "second_moment": complex_json(&r.second_moment, digits),
        "variance": complex_json(&r.variance, digits),
        "dj_dphi_sq": real_to_decimal(&r.dj_dphi_sq, digits),
        "lod_db": r.lod_db.as_ref().map(|x| real_to_decimal(x, digits)),
    })
}

pub fn lodi_json(r: &LodiReport, digits: u32) -> Value {
    json!({
        "lod_tsu11_db": real_to_decimal(&r.lod_tsu11_db, digits),
        "lod_classical_db": real_to_decimal(&r.lod_classical_db, digits),
        "lodi_db": real_to_decimal(&r.lodi_db, digits),
    })
}

/// Provenance record written next to every CSV file.
pub fn sidecar(command: &str, p: &InterferometerParams, table: &Table, extra: Value) -> Value {
    json!({
        "engine": ENGINE_NAME,
        "engine_version": ENGINE_VERSION,
        "command": command,
        "columns": table.columns,
        "rows": table.rows.len(),
        "digits": table.digits,
        "params": params_json(p),
        "details": extra,
    })
}

/// Pretty JSON with a trailing newline; key order is sorted, so output is
/// stable across runs.
pub fn to_json_string(v: &Value) -> Result<String, ReportError> {
    let mut s = serde_json::to_string_pretty(v)?;
    s.push('\n');
    Ok(s)
}

/// dB value rounded to 4 decimals for human-readable summaries.
pub fn db4(x: &Float) -> String {
    format!("{:.4}", x.to_f64())
}

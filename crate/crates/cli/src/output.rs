//! Tables, number formatting and the provenance header.

use std::io::Write;

use ghzmetro::{Exact, Scalar};
use serde::Serialize;
use serde_json::{json, Map, Value};

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

/// A table cell; rendering depends on the output format and exactness.
#[derive(Clone, Debug)]
pub enum Cell {
    Int(i64),
    Text(String),
    Real(f64),
    Rational(Exact),
    Empty,
}

impl From<&str> for Cell {
    fn from(s: &str) -> Self {
        Cell::Text(s.to_string())
    }
}

impl From<String> for Cell {
    fn from(s: String) -> Self {
        Cell::Text(s)
    }
}

impl<T: Into<Cell>> From<Option<T>> for Cell {
    fn from(v: Option<T>) -> Self {
        v.map_or(Cell::Empty, Into::into)
    }
}

impl From<Exact> for Cell {
    fn from(v: Exact) -> Self {
        Cell::Rational(v)
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Real(v)
    }
}

macro_rules! int_cell {
    ($($t:ty),*) => {$(
        impl From<$t> for Cell {
            fn from(v: $t) -> Self {
                Cell::Int(v as i64)
            }
        }
    )*};
}
int_cell!(u32, u64, usize, i64);

/// Decimal with 17 significant digits.
pub fn sig17(v: f64) -> String {
    if v == 0.0 || !v.is_finite() {
        return format!("{v}");
    }
    let magnitude = v.abs().log10().floor() as i32;
    if !(-6..=16).contains(&magnitude) {
        return format!("{v:.16e}");
    }
    let decimals = (16 - magnitude).max(0) as usize;
    format!("{v:.decimals$}")
}

impl Cell {
    fn csv(&self, exact: bool) -> String {
        match self {
            Cell::Int(v) => v.to_string(),
            Cell::Text(s) => s.clone(),
            Cell::Real(v) => sig17(*v),
            Cell::Rational(r) if exact => r.to_wire(),
            Cell::Rational(r) => sig17(r.to_f64_lossy()),
            Cell::Empty => String::new(),
        }
    }

    fn json(&self, exact: bool) -> Value {
        match self {
            Cell::Int(v) => json!(v),
            Cell::Text(s) => json!(s),
            Cell::Real(v) => json!(v),
            Cell::Rational(r) if exact => json!(r.to_wire()),
            Cell::Rational(r) => json!(r.to_f64_lossy()),
            Cell::Empty => Value::Null,
        }
    }
}

#[derive(Clone, Debug, Default)]
pub struct Table {
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(columns: &[&'static str]) -> Self {
        Self { columns: columns.to_vec(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn to_json(&self, exact: bool) -> Value {
        Value::Array(
            self.rows
                .iter()
                .map(|row| {
                    let obj: Map<String, Value> =
                        self.columns.iter().zip(row).map(|(c, v)| (c.to_string(), v.json(exact))).collect();
                    Value::Object(obj)
                })
                .collect(),
        )
    }
}

/// Run metadata emitted ahead of every result.
#[derive(Clone, Debug, Serialize)]
pub struct Provenance {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub exact: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub timestamp_unix: Option<u64>,
}

impl Provenance {
    pub fn new(command: String, seed: Option<u64>, exact: bool, timestamp: bool) -> Self {
        let timestamp_unix = timestamp.then(|| {
            std::time::SystemTime::now().duration_since(std::time::UNIX_EPOCH).map_or(0, |d| d.as_secs())
        });
        Self { tool: "ghzmetro", version: env!("CARGO_PKG_VERSION"), command, seed, exact, timestamp_unix }
    }
}

/// Everything one command produces: a main table, free-form notes (CSV
/// comments / JSON `notes`) and an optional structured payload for JSON.
#[derive(Debug, Default)]
pub struct Report {
    pub table: Table,
    pub notes: Vec<(String, Cell)>,
    pub payload: Option<Value>,
}

impl Report {
    pub fn note(&mut self, key: &str, value: impl Into<Cell>) {
        self.notes.push((key.to_string(), value.into()));
    }
}

pub fn emit(out: &mut dyn Write, format: Format, exact: bool, prov: &Provenance, report: &Report) -> std::io::Result<()> {
    match format {
        Format::Csv => {
            writeln!(out, "# {} {}", prov.tool, prov.version)?;
            writeln!(out, "# command: {}", prov.command)?;
            if let Some(seed) = prov.seed {
                writeln!(out, "# seed: {seed}")?;
            }
            if let Some(ts) = prov.timestamp_unix {
                writeln!(out, "# timestamp_unix: {ts}")?;
            }
            for (k, v) in &report.notes {
                writeln!(out, "# {k}: {}", v.csv(exact))?;
            }
            let mut w = csv::WriterBuilder::new().from_writer(out);
            w.write_record(&report.table.columns)?;
            for row in &report.table.rows {
                w.write_record(row.iter().map(|c| c.csv(exact)))?;
            }
            w.flush()?;
        }
        Format::Json => {
            let mut doc = Map::new();
            doc.insert("provenance".into(), serde_json::to_value(prov).expect("plain struct"));
            let notes: Map<String, Value> = report.notes.iter().map(|(k, v)| (k.clone(), v.json(exact))).collect();
            if !notes.is_empty() {
                doc.insert("notes".into(), Value::Object(notes));
            }
            doc.insert("rows".into(), report.table.to_json(exact));
            if let Some(p) = &report.payload {
                doc.insert("result".into(), p.clone());
            }
            serde_json::to_writer_pretty(&mut *out, &Value::Object(doc))?;
            writeln!(out)?;
        }
    }
    Ok(())
}

//! Flat result tables written as CSV or as a JSON array of records.
//!
//! Floats use Rust's shortest round-trip representation in both formats, so a
//! value read back from either file is bit-identical.

use std::io::Write;

use anyhow::{bail, Result};
use serde_json::{Map, Number, Value};

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Float(f64),
    Int(i64),
    Bool(bool),
    Text(String),
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::Float(v) => format_float(*v),
            Cell::Int(v) => v.to_string(),
            Cell::Bool(v) => v.to_string(),
            Cell::Text(s) => s.clone(),
        }
    }

    fn json(&self) -> Result<Value> {
        Ok(match self {
            Cell::Float(v) => match Number::from_f64(*v) {
                Some(n) => Value::Number(n),
                None => bail!("cannot write non-finite value {v} as JSON"),
            },
            Cell::Int(v) => Value::from(*v),
            Cell::Bool(v) => Value::Bool(*v),
            Cell::Text(s) => Value::String(s.clone()),
        })
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Float(v)
    }
}

impl From<i64> for Cell {
    fn from(v: i64) -> Self {
        Cell::Int(v)
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Bool(v)
    }
}

impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::Text(v)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

/// Shortest decimal that parses back to the same f64.
pub fn format_float(v: f64) -> String {
    if v.is_finite() {
        // ryu's shortest form, also what serde_json writes
        let mut buf = ryu::Buffer::new();
        buf.format_finite(v).to_string()
    } else {
        v.to_string()
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Self { columns: columns.iter().map(|c| c.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    /// Append the rows of `other`, which must have the same columns.
    pub fn extend(&mut self, other: Table) {
        debug_assert_eq!(self.columns, other.columns);
        self.rows.extend(other.rows);
    }

    /// Prepend a constant column.
    pub fn with_leading(mut self, name: &str, value: Cell) -> Self {
        self.columns.insert(0, name.to_string());
        for r in &mut self.rows {
            r.insert(0, value.clone());
        }
        self
    }

    pub fn write_csv(&self, out: impl Write) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(&self.columns)?;
        for r in &self.rows {
            w.write_record(r.iter().map(Cell::csv))?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_json(&self) -> Result<Value> {
        let records = self
            .rows
            .iter()
            .map(|r| {
                let mut m = Map::new();
                for (c, v) in self.columns.iter().zip(r) {
                    m.insert(c.clone(), v.json()?);
                }
                Ok(Value::Object(m))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Value::Array(records))
    }

    pub fn write_json(&self, mut out: impl Write) -> Result<()> {
        serde_json::to_writer_pretty(&mut out, &self.to_json()?)?;
        writeln!(out)?;
        Ok(())
    }
}

//! Flat UTF-8 comma-separated tables with a header row.
//!
//! Floats print in Rust's shortest round-trip decimal form by default; the
//! hex-float option prints the raw IEEE-754 bits (`0x%016x`) for bit-exact
//! diffing across runs.

use crate::error::Result;
use std::io::Write;
use std::path::Path;

#[derive(Clone, Debug)]
pub enum Value {
    Int(i64),
    UInt(u64),
    Float(f64),
    Text(String),
}

impl From<f64> for Value {
    fn from(v: f64) -> Self {
        Value::Float(v)
    }
}

impl From<usize> for Value {
    fn from(v: usize) -> Self {
        Value::UInt(v as u64)
    }
}

impl From<u64> for Value {
    fn from(v: u64) -> Self {
        Value::UInt(v)
    }
}

impl From<&str> for Value {
    fn from(v: &str) -> Self {
        Value::Text(v.to_string())
    }
}

impl From<String> for Value {
    fn from(v: String) -> Self {
        Value::Text(v)
    }
}

#[derive(Clone, Debug, Default)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Value>>,
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Table {
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push_row(&mut self, row: Vec<Value>) {
        assert_eq!(row.len(), self.columns.len(), "row width mismatch");
        self.rows.push(row);
    }

    fn format_value(value: &Value, hex_floats: bool) -> String {
        match value {
            Value::Int(v) => v.to_string(),
            Value::UInt(v) => v.to_string(),
            Value::Float(v) => {
                if hex_floats {
                    format!("0x{:016x}", v.to_bits())
                } else {
                    format!("{v}")
                }
            }
            Value::Text(v) => {
                if v.contains(',') || v.contains('"') || v.contains('\n') {
                    format!("\"{}\"", v.replace('"', "\"\""))
                } else {
                    v.clone()
                }
            }
        }
    }

    pub fn to_csv_string(&self, hex_floats: bool) -> String {
        let mut out = String::new();
        out.push_str(&self.columns.join(","));
        out.push('\n');
        for row in &self.rows {
            let fields: Vec<String> = row
                .iter()
                .map(|v| Self::format_value(v, hex_floats))
                .collect();
            out.push_str(&fields.join(","));
            out.push('\n');
        }
        out
    }

    pub fn write_csv(&self, path: &Path, hex_floats: bool) -> Result<()> {
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent)?;
        }
        let mut file = std::fs::File::create(path)?;
        file.write_all(self.to_csv_string(hex_floats).as_bytes())?;
        file.flush()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_roundtrips_floats_exactly() {
        let mut table = Table::new(&["t", "value", "label"]);
        let tricky = 0.1_f64 + 0.2_f64;
        table.push_row(vec![0.0.into(), tricky.into(), "plain".into()]);
        table.push_row(vec![1.0.into(), f64::MIN_POSITIVE.into(), "comma,here".into()]);
        let text = table.to_csv_string(false);
        let line = text.lines().nth(1).unwrap();
        let reparsed: f64 = line.split(',').nth(1).unwrap().parse().unwrap();
        assert_eq!(reparsed.to_bits(), tricky.to_bits());
        assert!(text.lines().nth(2).unwrap().contains("\"comma,here\""));

        let hex = table.to_csv_string(true);
        let field = hex.lines().nth(1).unwrap().split(',').nth(1).unwrap();
        assert_eq!(field, format!("0x{:016x}", tricky.to_bits()));
    }
}

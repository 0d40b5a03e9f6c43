//! Tabular estimator output: CSV with a header row, plus a JSON object.

use std::io::{self, Write};

use serde_json::{Map, Value};

use crate::formats::fmt_real;

#[derive(Clone, Debug, PartialEq)]
pub enum Cell {
    Int(i64),
    UInt(u64),
    Real(f64),
    Text(String),
}

impl Cell {
    fn to_csv(&self) -> String {
        match self {
            Cell::Int(v) => v.to_string(),
            Cell::UInt(v) => v.to_string(),
            Cell::Real(v) => fmt_real(*v),
            Cell::Text(s) => s.clone(),
        }
    }

    fn to_json(&self) -> Value {
        match self {
            Cell::Int(v) => Value::from(*v),
            Cell::UInt(v) => Value::from(*v),
            // NaN and infinities become null.
            Cell::Real(v) => serde_json::Number::from_f64(*v).map_or(Value::Null, Value::Number),
            Cell::Text(s) => Value::from(s.as_str()),
        }
    }
}

impl From<u64> for Cell {
    fn from(v: u64) -> Self {
        Cell::UInt(v)
    }
}

impl From<i64> for Cell {
    fn from(v: i64) -> Self {
        Cell::Int(v)
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Real(v)
    }
}

impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::Text(v)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_owned())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(columns: &[&'static str]) -> Self {
        Table {
            columns: columns.to_vec(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn write_csv<W: Write>(&self, w: W) -> io::Result<()> {
        let mut csv = csv::Writer::from_writer(w);
        csv.write_record(&self.columns)?;
        for row in &self.rows {
            csv.write_record(row.iter().map(Cell::to_csv))?;
        }
        csv.flush()
    }

    /// One JSON object per row, keyed by column name.
    pub fn to_json(&self) -> Value {
        Value::Array(
            self.rows
                .iter()
                .map(|row| {
                    let obj: Map<String, Value> = self
                        .columns
                        .iter()
                        .zip(row)
                        .map(|(c, v)| ((*c).to_owned(), v.to_json()))
                        .collect();
                    Value::Object(obj)
                })
                .collect(),
        )
    }
}

/// Output of one analysis or fit.
#[derive(Clone, Debug)]
pub struct Report {
    /// Stem of the JSON file.
    pub name: String,
    /// One line printed to stdout.
    pub summary: String,
    /// Scalar results; tables are added under their file stem.
    pub fields: Map<String, Value>,
    /// `(file stem, table)`, each written as `<stem>.csv`.
    pub tables: Vec<(String, Table)>,
}

impl Report {
    pub fn new(name: &str) -> Self {
        Report {
            name: name.to_owned(),
            summary: String::new(),
            fields: Map::new(),
            tables: Vec::new(),
        }
    }

    pub fn field(&mut self, key: &str, value: impl Into<Value>) {
        self.fields.insert(key.to_owned(), value.into());
    }

    /// Like [`Report::field`], mapping non-finite reals to null.
    pub fn real(&mut self, key: &str, value: f64) {
        self.fields.insert(key.to_owned(), Cell::Real(value).to_json());
    }

    pub fn to_json(&self) -> Value {
        let mut obj = self.fields.clone();
        for (stem, table) in &self.tables {
            obj.insert(stem.clone(), table.to_json());
        }
        Value::Object(obj)
    }
}

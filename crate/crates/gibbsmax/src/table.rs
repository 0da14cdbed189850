//! Result tables and their CSV / JSON encodings.

use gibbsmax_core::bounds::fmt_f64;
use serde_json::{Map, Value};

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(u64),
    Text(String),
    Bool(bool),
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::Num(v) => fmt_f64(*v),
            Cell::Int(v) => v.to_string(),
            Cell::Text(s) => s.clone(),
            Cell::Bool(b) => b.to_string(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Num(v) if v.is_finite() => Value::from(*v),
            Cell::Num(v) => Value::from(fmt_f64(*v)),
            Cell::Int(v) => Value::from(*v),
            Cell::Text(s) => Value::from(s.as_str()),
            Cell::Bool(b) => Value::from(*b),
        }
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Num(v)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::Text(v)
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Bool(v)
    }
}

/// A column and whether it appears in CSV output (all columns appear in
/// JSON).
#[derive(Debug, Clone, Copy)]
pub struct Column {
    pub name: &'static str,
    pub in_csv: bool,
}

#[derive(Debug, Clone)]
pub struct Table {
    pub columns: Vec<Column>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(csv_columns: &[&'static str], json_only: &[&'static str]) -> Self {
        let columns = csv_columns
            .iter()
            .map(|&name| Column { name, in_csv: true })
            .chain(json_only.iter().map(|&name| Column { name, in_csv: false }))
            .collect();
        Table {
            columns,
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        assert_eq!(row.len(), self.columns.len(), "row width");
        self.rows.push(row);
    }

    /// CSV text preceded by one `# key=value ...` comment line.
    pub fn to_csv(&self, comment: &str) -> Result<String, csv::Error> {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(Vec::new());
        let keep: Vec<usize> = (0..self.columns.len()).filter(|&i| self.columns[i].in_csv).collect();
        w.write_record(keep.iter().map(|&i| self.columns[i].name))?;
        for row in &self.rows {
            w.write_record(keep.iter().map(|&i| row[i].csv()))?;
        }
        let body = String::from_utf8(w.into_inner().map_err(|e| e.into_error())?).expect("csv output is utf-8");
        Ok(format!("# {comment}\n{body}"))
    }

    pub fn to_json_rows(&self) -> Vec<Value> {
        self.rows
            .iter()
            .map(|row| {
                let mut m = Map::new();
                for (c, v) in self.columns.iter().zip(row) {
                    m.insert(c.name.to_string(), v.json());
                }
                Value::Object(m)
            })
            .collect()
    }
}

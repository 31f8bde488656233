//! CSV and JSON emitters. Floats are written with 17 significant digits.

use std::io::{self, Write};

use serde::Serialize;
use serde_json::{Map, Value};

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Int(i64),
    Float(f64),
    Text(String),
    Bool(bool),
    Empty,
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Float(v)
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Bool(v)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

impl From<Option<usize>> for Cell {
    fn from(v: Option<usize>) -> Self {
        v.map_or(Cell::Empty, Cell::from)
    }
}

pub fn fmt_float(x: f64) -> String {
    format!("{x:.16e}")
}

impl Cell {
    fn csv_field(&self) -> String {
        match self {
            Cell::Int(v) => v.to_string(),
            Cell::Float(v) => fmt_float(*v),
            Cell::Text(s) => s.clone(),
            Cell::Bool(b) => b.to_string(),
            Cell::Empty => String::new(),
        }
    }

    fn json(&self) -> Option<Value> {
        match self {
            Cell::Int(v) => Some(Value::from(*v)),
            Cell::Float(v) => Some(Value::from(*v)),
            Cell::Text(s) => Some(Value::from(s.as_str())),
            Cell::Bool(b) => Some(Value::from(*b)),
            Cell::Empty => None,
        }
    }
}

/// A tabular result plus run metadata.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Report {
    pub meta: Map<String, Value>,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
    /// Replaces the row objects derived from `rows` in JSON output.
    pub json_rows: Option<Vec<Value>>,
}

impl Report {
    pub fn new(columns: &[&str]) -> Self {
        Self {
            columns: columns.iter().map(|c| c.to_string()).collect(),
            ..Default::default()
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn write_csv<W: Write>(&self, w: W) -> io::Result<()> {
        let mut out = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(w);
        out.write_record(&self.columns)?;
        for row in &self.rows {
            out.write_record(row.iter().map(Cell::csv_field))?;
        }
        out.flush()
    }

    fn row_objects(&self) -> Vec<Value> {
        self.rows
            .iter()
            .map(|row| {
                let mut obj = Map::new();
                for (c, v) in self.columns.iter().zip(row) {
                    if let Some(j) = v.json() {
                        obj.insert(c.clone(), j);
                    }
                }
                Value::Object(obj)
            })
            .collect()
    }

    pub fn write_json<W: Write>(&self, mut w: W) -> io::Result<()> {
        let rows = match &self.json_rows {
            Some(r) => r.clone(),
            None => self.row_objects(),
        };
        let mut top = Map::new();
        top.insert("meta".into(), Value::Object(self.meta.clone()));
        top.insert("rows".into(), Value::Array(rows));
        let mut ser = serde_json::Serializer::with_formatter(&mut w, Scientific);
        Value::Object(top).serialize(&mut ser).map_err(io::Error::other)?;
        w.write_all(b"\n")
    }
}

/// Compact JSON with every float in `{:.16e}` form.
struct Scientific;

impl serde_json::ser::Formatter for Scientific {
    fn write_f64<W: ?Sized + Write>(&mut self, w: &mut W, value: f64) -> io::Result<()> {
        write!(w, "{}", fmt_float(value))
    }
}

/// Complex number as a two-element JSON array.
pub fn complex_json(re: f64, im: f64) -> Value {
    Value::Array(vec![Value::from(re), Value::from(im)])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Report {
        let mut r = Report::new(&["eps", "n", "label", "ok", "opt"]);
        r.meta.insert("command".into(), Value::from("test"));
        r.push(vec![
            0.1.into(),
            3usize.into(),
            "a,b".into(),
            true.into(),
            Cell::Empty,
        ]);
        r.push(vec![
            1e-300.into(),
            0usize.into(),
            "x".into(),
            false.into(),
            Some(2usize).into(),
        ]);
        r
    }

    #[test]
    fn csv_uses_lf_and_seventeen_digits() {
        let mut buf = Vec::new();
        sample().write_csv(&mut buf).unwrap();
        let s = String::from_utf8(buf).unwrap();
        assert!(!s.contains('\r'));
        let lines: Vec<_> = s.lines().collect();
        assert_eq!(lines[0], "eps,n,label,ok,opt");
        assert_eq!(lines[1], "1.0000000000000001e-1,3,\"a,b\",true,");
        assert_eq!(lines[2], "1.0000000000000000e-300,0,x,false,2");
    }

    #[test]
    fn floats_round_trip() {
        for x in [0.1, 1.0 / 3.0, -2.5e-17, 6.02214076e23, 0.0] {
            assert_eq!(fmt_float(x).parse::<f64>().unwrap(), x);
        }
    }

    #[test]
    fn json_has_meta_and_rows() {
        let mut buf = Vec::new();
        sample().write_json(&mut buf).unwrap();
        let v: Value = serde_json::from_slice(&buf).unwrap();
        assert_eq!(v["meta"]["command"], "test");
        assert_eq!(v["rows"][0]["eps"].as_f64(), Some(0.1));
        assert!(v["rows"][0].get("opt").is_none());
        assert_eq!(v["rows"][1]["opt"], 2);
        let text = String::from_utf8(buf).unwrap();
        assert!(text.contains("1.0000000000000001e-1"));
    }
}

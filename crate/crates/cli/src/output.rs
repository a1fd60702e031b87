//! CSV / JSON rendering with a run-metadata header.
//!
//! CSV: `#`-prefixed metadata lines, a header row, data rows, then `#` summary
//! lines. JSON: one object with `meta`, the data (columns as arrays, or a
//! `result` object for single-row outputs) and `summary`.

use serde_json::{Map, Number, Value};

use crate::config::Format;

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(u64),
    Bool(bool),
    Text(String),
    Empty,
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Num(v)
    }
}

impl From<u64> for Cell {
    fn from(v: u64) -> Self {
        Cell::Int(v)
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

impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::Text(v)
    }
}

impl<T: Into<Cell>> From<Option<T>> for Cell {
    fn from(v: Option<T>) -> Self {
        v.map_or(Cell::Empty, Into::into)
    }
}

/// Rounds to `digits` significant digits; `None` leaves the value alone.
fn round_sig(v: f64, digits: Option<usize>) -> f64 {
    match digits {
        Some(d) if v.is_finite() => format!("{:.*e}", d - 1, v).parse().unwrap_or(v),
        _ => v,
    }
}

/// Shortest representation that parses back to the same `f64`, switching to
/// exponent form for very large or small magnitudes.
pub fn format_number(v: f64, digits: Option<usize>) -> String {
    let v = round_sig(v, digits);
    if !v.is_finite() {
        return if v.is_nan() {
            "NaN".into()
        } else if v > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        };
    }
    let a = v.abs();
    if a == 0.0 || (1e-5..1e16).contains(&a) {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}

impl Cell {
    fn csv(&self, digits: Option<usize>) -> String {
        match self {
            Cell::Num(v) => format_number(*v, digits),
            Cell::Int(v) => v.to_string(),
            Cell::Bool(b) => b.to_string(),
            Cell::Text(s) if s.contains([',', '"', '\n']) => format!("\"{}\"", s.replace('"', "\"\"")),
            Cell::Text(s) => s.clone(),
            Cell::Empty => String::new(),
        }
    }

    fn json(&self, digits: Option<usize>) -> Value {
        match self {
            Cell::Num(v) => Number::from_f64(round_sig(*v, digits)).map_or(Value::Null, Value::Number),
            Cell::Int(v) => Value::from(*v),
            Cell::Bool(b) => Value::Bool(*b),
            Cell::Text(s) => Value::String(s.clone()),
            Cell::Empty => Value::Null,
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct Report {
    pub meta: Vec<(String, Cell)>,
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
    pub summary: Vec<(String, Cell)>,
    /// Render JSON data as a single `result` object instead of column arrays.
    pub single: bool,
}

impl Report {
    pub fn new(columns: Vec<&'static str>) -> Self {
        Self {
            columns,
            ..Self::default()
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn meta(&mut self, key: &str, value: impl Into<Cell>) {
        self.meta.push((key.to_string(), value.into()));
    }

    pub fn summary(&mut self, key: &str, value: impl Into<Cell>) {
        self.summary.push((key.to_string(), value.into()));
    }

    pub fn render(&self, format: Format, digits: Option<usize>) -> String {
        match format {
            Format::Csv => self.csv(digits),
            Format::Json => {
                let mut s = serde_json::to_string_pretty(&self.json(digits)).expect("JSON values are serialisable");
                s.push('\n');
                s
            }
        }
    }

    fn csv(&self, digits: Option<usize>) -> String {
        let mut out = String::new();
        let kv = |out: &mut String, k: &str, v: &Cell| {
            out.push_str(&format!("# {k} = {}\n", v.csv(None)));
        };
        for (k, v) in &self.meta {
            kv(&mut out, k, v);
        }
        out.push_str(&self.columns.join(","));
        out.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(|c| c.csv(digits)).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        for (k, v) in &self.summary {
            kv(&mut out, k, v);
        }
        out
    }

    fn json(&self, digits: Option<usize>) -> Value {
        let object = |pairs: &[(String, Cell)], d: Option<usize>| -> Value {
            Value::Object(pairs.iter().map(|(k, v)| (k.clone(), v.json(d))).collect())
        };
        let mut root = Map::new();
        root.insert("meta".into(), object(&self.meta, None));
        if self.single {
            let row = self.rows.first().map(Vec::as_slice).unwrap_or(&[]);
            let result = self
                .columns
                .iter()
                .zip(row)
                .map(|(k, v)| (k.to_string(), v.json(digits)));
            root.insert("result".into(), Value::Object(result.collect()));
        } else {
            let data = self.columns.iter().enumerate().map(|(j, k)| {
                let col = self.rows.iter().map(|r| r[j].json(digits)).collect();
                (k.to_string(), Value::Array(col))
            });
            root.insert("data".into(), Value::Object(data.collect()));
        }
        root.insert("summary".into(), object(&self.summary, digits));
        Value::Object(root)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numbers_round_trip() {
        for v in [
            0.0,
            0.1,
            1.0 / 3.0,
            1.2e8,
            7.48e22,
            3e-9,
            -2.5,
            446_937_462_192.442_8,
            f64::MAX,
            5e-324,
        ] {
            let s = format_number(v, None);
            assert_eq!(s.parse::<f64>().unwrap(), v, "{s}");
        }
        assert_eq!(format_number(1.2e8, None), "120000000");
        assert_eq!(format_number(7.5e22, None), "7.5e22");
        assert_eq!(format_number(1.0 / 3.0, Some(4)), "0.3333");
    }

    #[test]
    fn csv_layout() {
        let mut r = Report::new(vec!["t", "R_t", "note"]);
        r.meta("seed", 7u64);
        r.push(vec![0u64.into(), Cell::Empty, "a,b".into()]);
        r.push(vec![1u64.into(), 0.05.into(), true.into()]);
        r.summary("extinction_time", Some(104u64));
        assert_eq!(
            r.render(Format::Csv, None),
            "# seed = 7\nt,R_t,note\n0,,\"a,b\"\n1,0.05,true\n# extinction_time = 104\n"
        );
    }

    #[test]
    fn json_layout() {
        let mut r = Report::new(vec!["S", "corner"]);
        r.push(vec![1.5.into(), false.into()]);
        r.summary("x", Cell::Num(f64::NAN));
        let v: Value = serde_json::from_str(&r.render(Format::Json, None)).unwrap();
        assert_eq!(v["data"]["S"][0], 1.5);
        assert!(v["summary"]["x"].is_null());
        r.single = true;
        let v: Value = serde_json::from_str(&r.render(Format::Json, None)).unwrap();
        assert_eq!(v["result"]["corner"], false);
    }
}

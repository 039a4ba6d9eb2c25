//! Tabular output in CSV or JSON, written atomically.
//!
//! CSV floats use 17 significant digits (`%.17g`), so every value round-trips.
//! JSON holds an array with one object per row; non-finite floats become `null`.

use serde_json::{Map, Number, Value};
use std::io::Write;
use std::path::Path;

use crate::error::{invalid, Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Format {
    Csv,
    Json,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Cell {
    Float(f64),
    Int(i64),
    Text(String),
    Bool(bool),
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

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_owned())
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

impl Cell {
    fn to_csv(&self) -> String {
        match self {
            Cell::Float(v) => format_float(*v),
            Cell::Int(v) => v.to_string(),
            Cell::Text(s) => s.clone(),
            Cell::Bool(b) => b.to_string(),
        }
    }

    fn to_json(&self) -> Value {
        match self {
            Cell::Float(v) => Number::from_f64(*v).map_or(Value::Null, Value::Number),
            Cell::Int(v) => Value::from(*v),
            Cell::Text(s) => Value::from(s.as_str()),
            Cell::Bool(b) => Value::from(*b),
        }
    }
}

/// Rows under a fixed header.
#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    headers: Vec<&'static str>,
    rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(headers: &[&'static str]) -> Self {
        Self {
            headers: headers.to_vec(),
            rows: Vec::new(),
        }
    }

    pub fn headers(&self) -> &[&'static str] {
        &self.headers
    }

    pub fn rows(&self) -> &[Vec<Cell>] {
        &self.rows
    }

    pub fn push(&mut self, row: Vec<Cell>) -> Result<()> {
        if row.len() != self.headers.len() {
            return invalid(format!("row has {} cells, table has {} columns", row.len(), self.headers.len()));
        }
        self.rows.push(row);
        Ok(())
    }

    pub fn render(&self, format: Format) -> Result<Vec<u8>> {
        match format {
            Format::Csv => {
                let mut w = csv::Writer::from_writer(Vec::new());
                let io = |e: csv::Error| Error::Io(e.to_string());
                w.write_record(&self.headers).map_err(io)?;
                for row in &self.rows {
                    w.write_record(row.iter().map(Cell::to_csv)).map_err(io)?;
                }
                w.into_inner().map_err(|e| Error::Io(e.to_string()))
            }
            Format::Json => {
                let rows: Vec<Value> = self
                    .rows
                    .iter()
                    .map(|row| {
                        let obj: Map<String, Value> =
                            self.headers.iter().zip(row).map(|(h, c)| (h.to_string(), c.to_json())).collect();
                        Value::Object(obj)
                    })
                    .collect();
                let mut out = serde_json::to_vec_pretty(&Value::Array(rows)).map_err(|e| Error::Io(e.to_string()))?;
                out.push(b'\n');
                Ok(out)
            }
        }
    }
}

/// One verification line: `pass` iff `band_lo <= sampled - analytic <= band_hi`.
#[derive(Clone, Debug, PartialEq)]
pub struct ReportRow {
    pub experiment: String,
    pub parameters: String,
    pub analytic: f64,
    pub sampled: f64,
    pub band_lo: f64,
    pub band_hi: f64,
    pub pass: bool,
}

pub const REPORT_HEADERS: [&str; 7] = ["experiment", "parameters", "analytic", "sampled", "band_lo", "band_hi", "pass"];

impl ReportRow {
    pub fn new(
        experiment: impl Into<String>,
        parameters: impl Into<String>,
        analytic: f64,
        sampled: f64,
        band_lo: f64,
        band_hi: f64,
    ) -> Self {
        let d = sampled - analytic;
        Self {
            experiment: experiment.into(),
            parameters: parameters.into(),
            analytic,
            sampled,
            band_lo,
            band_hi,
            pass: band_lo <= d && d <= band_hi,
        }
    }

    /// Symmetric band `|sampled - analytic| <= band`.
    pub fn within(
        experiment: impl Into<String>,
        parameters: impl Into<String>,
        analytic: f64,
        sampled: f64,
        band: f64,
    ) -> Self {
        Self::new(experiment, parameters, analytic, sampled, -band, band)
    }
}

pub fn report_table(rows: &[ReportRow]) -> Table {
    let mut t = Table::new(&REPORT_HEADERS);
    for r in rows {
        t.rows.push(vec![
            r.experiment.as_str().into(),
            r.parameters.as_str().into(),
            r.analytic.into(),
            r.sampled.into(),
            r.band_lo.into(),
            r.band_hi.into(),
            r.pass.into(),
        ]);
    }
    t
}

/// Writes `bytes` to `path` through a temporary file in the same directory, so the
/// target is either untouched or complete.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let io = |e: std::io::Error| Error::Io(format!("{}: {e}", path.display()));
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io)?;
    tmp.write_all(bytes).map_err(io)?;
    tmp.flush().map_err(io)?;
    tmp.persist(path).map_err(|e| io(e.error))?;
    Ok(())
}

pub fn emit_table(table: &Table, format: Format, path: &Path) -> Result<()> {
    write_atomic(path, &table.render(format)?)
}

pub fn emit_report(rows: &[ReportRow], format: Format, path: &Path) -> Result<()> {
    emit_table(&report_table(rows), format, path)
}

/// C `%.17g`.
pub fn format_float(v: f64) -> String {
    if v.is_nan() {
        return "nan".into();
    }
    if v.is_infinite() {
        return if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let sci = format!("{v:.16e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    let (sign, mantissa) = match mantissa.strip_prefix('-') {
        Some(m) => ("-", m),
        None => ("", mantissa),
    };
    let digits: String = mantissa.chars().filter(|c| *c != '.').collect();
    let digits = digits.trim_end_matches('0');
    let digits = if digits.is_empty() { "0" } else { digits };
    if !(-4..17).contains(&exp) {
        let (head, tail) = digits.split_at(1);
        let frac = if tail.is_empty() { String::new() } else { format!(".{tail}") };
        let esign = if exp < 0 { '-' } else { '+' };
        return format!("{sign}{head}{frac}e{esign}{:02}", exp.abs());
    }
    if exp < 0 {
        return format!("{sign}0.{}{digits}", "0".repeat((-exp - 1) as usize));
    }
    let int_len = exp as usize + 1;
    if digits.len() <= int_len {
        format!("{sign}{digits}{}", "0".repeat(int_len - digits.len()))
    } else {
        format!("{sign}{}.{}", &digits[..int_len], &digits[int_len..])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn float_formatting_matches_printf() {
        let cases = [
            (1.0 / 3.0, "0.33333333333333331"),
            (0.1, "0.10000000000000001"),
            (0.0, "0"),
            (-0.0, "-0"),
            (1.5, "1.5"),
            (100.0, "100"),
            (-2.25e-5, "-2.2500000000000001e-05"),
            (1e17, "1e+17"),
            (123456789.0, "123456789"),
            (0.0001, "0.0001"),
            (f64::NAN, "nan"),
        ];
        for (v, want) in cases {
            assert_eq!(format_float(v), want, "{v}");
        }
    }

    #[test]
    fn float_formatting_round_trips() {
        for v in [std::f64::consts::PI, 1e-300, 6.02e23, -7.0 / 9.0, f64::MAX, f64::MIN_POSITIVE] {
            assert_eq!(format_float(v).parse::<f64>().unwrap(), v);
        }
    }

    #[test]
    fn csv_shapes() {
        let empty = report_table(&[]).render(Format::Csv).unwrap();
        assert_eq!(String::from_utf8(empty).unwrap(), "experiment,parameters,analytic,sampled,band_lo,band_hi,pass\n");
        let row = ReportRow::within("x", "theta=1, axis=Z", 1.0 / 3.0, 0.3, 0.1);
        assert!(row.pass);
        let text = String::from_utf8(report_table(&[row]).render(Format::Csv).unwrap()).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 2);
        assert_eq!(lines[1], "x,\"theta=1, axis=Z\",0.33333333333333331,0.29999999999999999,-0.10000000000000001,0.10000000000000001,true");
    }

    #[test]
    fn json_rows_are_objects() {
        let mut t = Table::new(&["a", "b"]);
        t.push(vec![Cell::Float(f64::NAN), Cell::Int(3)]).unwrap();
        assert!(t.push(vec![Cell::Int(1)]).is_err());
        let v: Value = serde_json::from_slice(&t.render(Format::Json).unwrap()).unwrap();
        assert_eq!(v, serde_json::json!([{"a": null, "b": 3}]));
    }

    #[test]
    fn failing_rows() {
        assert!(!ReportRow::within("x", "", 0.0, 0.2, 0.1).pass);
        assert!(!ReportRow::within("x", "", 0.0, f64::NAN, 0.1).pass);
        assert!(ReportRow::new("x", "", 0.0, 1.0, 1e-300, f64::INFINITY).pass);
    }

    #[test]
    fn atomic_write_replaces_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("out.csv");
        emit_report(&[], Format::Csv, &path).unwrap();
        emit_report(&[ReportRow::within("x", "", 1.0, 1.0, 0.0)], Format::Json, &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.contains("\"pass\": true"));
        assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 1);
        let missing = dir.path().join("no/such/dir/out.csv");
        assert!(matches!(emit_report(&[], Format::Csv, &missing), Err(Error::Io(_))));
    }
}

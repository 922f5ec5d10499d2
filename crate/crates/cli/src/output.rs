//! CSV tables and JSON sidecar manifests, written atomically.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::Serialize;
use serde_json::Value;

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(i64),
    Text(String),
    Empty,
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Num(v)
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
        Cell::Int(i64::from(v))
    }
}

impl From<Option<f64>> for Cell {
    fn from(v: Option<f64>) -> Self {
        v.map_or(Cell::Empty, Cell::Num)
    }
}

/// Rectangular table with a header row.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new<S: Into<String>>(header: impl IntoIterator<Item = S>) -> Self {
        Self {
            header: header.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        self.rows.push(row);
    }

    fn check(&self) -> Result<(), CliError> {
        for (i, row) in self.rows.iter().enumerate() {
            if row.len() != self.header.len() {
                return Err(CliError::Numerical(format!(
                    "table row {i} has {} cells, header has {}",
                    row.len(),
                    self.header.len()
                )));
            }
            for (j, cell) in row.iter().enumerate() {
                if matches!(cell, Cell::Num(v) if v.is_nan()) {
                    return Err(CliError::Numerical(format!(
                        "NaN in result table at row {i}, column `{}`",
                        self.header[j]
                    )));
                }
            }
        }
        Ok(())
    }

    /// Serialize to CSV bytes. Floats use the shortest representation that
    /// parses back to the same value.
    pub fn to_csv(&self) -> Result<Vec<u8>, CliError> {
        self.check()?;
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(Vec::new());
        let io = |e: csv::Error| CliError::Numerical(format!("csv encoding: {e}"));
        w.write_record(&self.header).map_err(io)?;
        for row in &self.rows {
            w.write_record(row.iter().map(format_cell)).map_err(io)?;
        }
        w.into_inner().map_err(|e| CliError::Numerical(format!("csv encoding: {e}")))
    }

    /// Parse a table produced by [`Table::to_csv`]. Every non-empty field
    /// that parses as a float becomes [`Cell::Num`] unless it is an integer
    /// literal.
    pub fn from_csv(bytes: &[u8]) -> Result<Self, csv::Error> {
        let mut r = csv::ReaderBuilder::new().from_reader(bytes);
        let header = r.headers()?.iter().map(str::to_owned).collect();
        let mut rows = Vec::new();
        for rec in r.records() {
            rows.push(rec?.iter().map(parse_cell).collect());
        }
        Ok(Self { header, rows })
    }
}

fn format_cell(c: &Cell) -> String {
    match c {
        Cell::Num(v) => format_float(*v),
        Cell::Int(v) => v.to_string(),
        Cell::Text(s) => s.clone(),
        Cell::Empty => String::new(),
    }
}

/// Shortest round-trip form; always carries a `.`, exponent or `inf` so it
/// reads back as a float.
pub fn format_float(v: f64) -> String {
    let s = format!("{v:?}");
    debug_assert_eq!(s.parse::<f64>().ok(), Some(v));
    s
}

fn parse_cell(s: &str) -> Cell {
    if s.is_empty() {
        return Cell::Empty;
    }
    if let Ok(i) = s.parse::<i64>() {
        return Cell::Int(i);
    }
    match s.parse::<f64>() {
        Ok(v) => Cell::Num(v),
        Err(_) => Cell::Text(s.to_owned()),
    }
}

/// Write `bytes` to `path` through a temporary file in the same directory.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d.to_path_buf(),
        _ => PathBuf::from("."),
    };
    std::fs::create_dir_all(&dir).map_err(|e| CliError::io(&dir, e))?;
    let mut tmp = tempfile::NamedTempFile::new_in(&dir).map_err(|e| CliError::io(&dir, e))?;
    tmp.write_all(bytes).map_err(|e| CliError::io(path, e))?;
    tmp.as_file().sync_all().map_err(|e| CliError::io(path, e))?;
    tmp.persist(path).map_err(|e| CliError::io(path, e.error))?;
    Ok(())
}

pub fn emit_csv(table: &Table, path: &Path) -> Result<(), CliError> {
    write_atomic(path, &table.to_csv()?)
}

/// Path of the sidecar manifest for `out`: `<out>.json`.
pub fn manifest_path(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".json");
    PathBuf::from(s)
}

#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    pub output: String,
    pub seed: Option<u64>,
    pub parameters: Value,
    pub notes: Vec<String>,
    pub results: Value,
    pub wall_time_s: f64,
}

impl Manifest {
    pub fn new(command: &str, out: &Path, seed: Option<u64>, parameters: Value) -> Self {
        Self {
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            command: command.to_owned(),
            output: out
                .file_name()
                .map(|f| f.to_string_lossy().into_owned())
                .unwrap_or_default(),
            seed,
            parameters,
            notes: Vec::new(),
            results: Value::Null,
            wall_time_s: 0.0,
        }
    }

    pub fn write(&mut self, out: &Path, elapsed: Duration) -> Result<(), CliError> {
        self.wall_time_s = elapsed.as_secs_f64();
        let mut text = serde_json::to_string_pretty(self).map_err(|e| CliError::Numerical(e.to_string()))?;
        text.push('\n');
        write_atomic(&manifest_path(out), text.as_bytes())
    }
}

/// Write a table and its manifest.
pub fn emit(table: &Table, out: &Path, manifest: &mut Manifest, elapsed: Duration) -> Result<(), CliError> {
    emit_csv(table, out)?;
    manifest.write(out, elapsed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn empty_table_is_header_only() {
        let t = Table::new(["lag", "value"]);
        assert_eq!(t.to_csv().unwrap(), b"lag,value\n");
    }

    #[test]
    fn nan_is_rejected() {
        let mut t = Table::new(["x"]);
        t.push(vec![Cell::Num(f64::NAN)]);
        assert!(matches!(t.to_csv(), Err(CliError::Numerical(_))));
    }

    #[test]
    fn ragged_rows_are_rejected() {
        let mut t = Table::new(["a", "b"]);
        t.push(vec![Cell::Int(1)]);
        assert!(t.to_csv().is_err());
    }

    #[test]
    fn floats_keep_a_float_form() {
        assert_eq!(format_float(1.0), "1.0");
        assert_eq!(format_float(0.1), "0.1");
        assert_eq!(format_float(-1e-300), "-1e-300");
        assert_eq!(format_float(f64::NEG_INFINITY), "-inf");
    }

    #[test]
    fn atomic_write_replaces_file() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("sub").join("x.csv");
        write_atomic(&p, b"one\n").unwrap();
        write_atomic(&p, b"two\n").unwrap();
        assert_eq!(std::fs::read(&p).unwrap(), b"two\n");
        assert_eq!(std::fs::read_dir(p.parent().unwrap()).unwrap().count(), 1);
    }

    fn cell() -> impl Strategy<Value = Cell> {
        prop_oneof![
            any::<f64>().prop_filter("finite or inf", |v| !v.is_nan()).prop_map(Cell::Num),
            any::<i64>().prop_map(Cell::Int),
            "[a-z][a-z ,\"]{0,8}"
                .prop_filter("not a number", |s| s.parse::<f64>().is_err())
                .prop_map(Cell::Text),
            Just(Cell::Empty),
        ]
    }

    proptest! {
        #[test]
        fn csv_round_trip(rows in proptest::collection::vec(proptest::collection::vec(cell(), 3), 0..20)) {
            let mut t = Table::new(["a", "b", "c"]);
            for r in rows {
                t.push(r);
            }
            let bytes = t.to_csv().unwrap();
            prop_assert!(!bytes.contains(&b'\r'));
            prop_assert_eq!(Table::from_csv(&bytes).unwrap(), t);
        }
    }
}

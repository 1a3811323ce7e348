//! CSV and JSON emission. Reals are written with 17 significant digits and
//! LF line endings so files compare byte for byte across runs.

use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::Path;

use serde::Serialize;

/// CSV cell.
pub enum Cell {
    Real(f64),
    Int(u64),
    Text(String),
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Real(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as u64)
    }
}

impl From<u64> for Cell {
    fn from(v: u64) -> Self {
        Cell::Int(v)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

pub fn format_real(v: f64) -> String {
    format!("{v:.16e}")
}

fn render(cell: &Cell) -> String {
    match cell {
        Cell::Real(v) => format_real(*v),
        Cell::Int(v) => v.to_string(),
        Cell::Text(s) => s.clone(),
    }
}

/// Writes `# provenance`, the header row, then the rows.
pub fn write_csv(
    path: &Path,
    provenance: &str,
    header: &[&str],
    rows: impl IntoIterator<Item = Vec<Cell>>,
) -> io::Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "# {provenance}")?;
    writeln!(w, "{}", header.join(","))?;
    for row in rows {
        debug_assert_eq!(row.len(), header.len());
        let line = row.iter().map(render).collect::<Vec<_>>().join(",");
        writeln!(w, "{line}")?;
    }
    w.flush()
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> io::Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(io::Error::other)?;
    text.push('\n');
    fs::write(path, text)
}

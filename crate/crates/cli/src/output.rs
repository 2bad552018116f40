//! CSV tables with a commented configuration header.
//!
//! Every file starts with the run configuration, one `# `-prefixed TOML line
//! at a time, followed by a mandatory header row and the data rows. Numbers
//! use `.` as decimal separator and switch to scientific notation when their
//! magnitude is at least `1e6` or below `1e-6`. All values are printed with
//! the shortest representation that parses back to the same `f64`.

use std::fs;
use std::path::{Path, PathBuf};

use crate::CliError;

/// Formats a float for CSV output.
pub fn fmt_f64(x: f64) -> String {
    let a = x.abs();
    if x != 0.0 && x.is_finite() && !(1e-6..1e6).contains(&a) {
        format!("{x:e}")
    } else {
        format!("{x}")
    }
}

/// One table cell.
#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(u64),
    Text(String),
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Num(x) => fmt_f64(*x),
            Cell::Int(n) => n.to_string(),
            Cell::Text(s) => s.clone(),
        }
    }
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Num(x)
    }
}

impl From<usize> for Cell {
    fn from(n: usize) -> Self {
        Cell::Int(n as u64)
    }
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

/// In-memory table written in one go.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new<S: Into<String>>(header: impl IntoIterator<Item = S>) -> Self {
        Table { header: header.into_iter().map(Into::into).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    /// Renders the table below a commented copy of `echo`.
    pub fn render(&self, echo: &str) -> Result<String, CliError> {
        let mut out = String::new();
        for line in echo.lines() {
            out.push_str("# ");
            out.push_str(line);
            out.push('\n');
        }
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
        w.write_record(&self.header).map_err(io_err)?;
        for row in &self.rows {
            w.write_record(row.iter().map(Cell::render)).map_err(io_err)?;
        }
        let bytes = w.into_inner().map_err(|e| CliError::Io(format!("csv buffer: {e}")))?;
        out.push_str(&String::from_utf8(bytes).expect("csv output is utf-8"));
        Ok(out)
    }

    pub fn write(&self, dir: &Path, name: &str, echo: &str) -> Result<PathBuf, CliError> {
        let path = dir.join(name);
        fs::write(&path, self.render(echo)?).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        log::info!("wrote {} ({} rows)", path.display(), self.rows.len());
        Ok(path)
    }
}

fn io_err(e: csv::Error) -> CliError {
    CliError::Io(format!("csv: {e}"))
}

//! CSV output with a header row and round-trippable floats.

use std::io::Write;
use std::path::Path;

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    F(f64),
    U(u64),
    S(String),
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::F(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::U(v as u64)
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::U(v as u64)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::S(v.to_string())
    }
}

/// Seventeen significant digits.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::F(v) => fmt_f64(*v),
            Cell::U(v) => v.to_string(),
            Cell::S(s) => s.clone(),
        }
    }
}

pub struct Table {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(header: Vec<&'static str>) -> Self {
        Self { header, rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn write_to<W: Write>(&self, w: W) -> csv::Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(&self.header)?;
        for r in &self.rows {
            out.write_record(r.iter().map(Cell::render))?;
        }
        out.flush()?;
        Ok(())
    }

    /// Write to `path`, or to stdout when no path is given.
    pub fn save(&self, path: Option<&Path>) -> Result<(), CliError> {
        let res = match path {
            Some(p) => {
                let f = std::fs::File::create(p).map_err(|e| CliError::Io { path: p.to_path_buf(), msg: e.to_string() })?;
                self.write_to(std::io::BufWriter::new(f))
            }
            None => self.write_to(std::io::stdout().lock()),
        };
        res.map_err(|e| CliError::Io { path: path.map(Path::to_path_buf).unwrap_or_else(|| "<stdout>".into()), msg: e.to_string() })
    }
}

//! CSV and JSON artifacts.
//!
//! Numbers are written in scientific notation with 17 significant digits so
//! every value survives a round trip bit for bit.

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::{CliError, CliResult};

pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

/// Column-named table of text cells.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Self { header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    /// Appends a row of numbers.
    pub fn push(&mut self, values: &[f64]) {
        self.rows.push(values.iter().map(|x| num(*x)).collect());
    }

    pub fn push_cells(&mut self, cells: Vec<String>) {
        self.rows.push(cells);
    }

    pub fn column_index(&self, name: &str) -> CliResult<usize> {
        self.header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| CliError::Config(format!("no column `{name}`")))
    }

    /// Column `name` parsed as numbers.
    pub fn column(&self, name: &str) -> CliResult<Vec<f64>> {
        let i = self.column_index(name)?;
        self.rows
            .iter()
            .map(|r| {
                r[i].parse::<f64>()
                    .map_err(|e| CliError::Config(format!("column `{name}`: bad number `{}`: {e}", r[i])))
            })
            .collect()
    }

    pub fn write_to<W: Write>(&self, w: W) -> CliResult<()> {
        let mut wtr = csv::Writer::from_writer(w);
        let wrap = |e: csv::Error| CliError::Numerical(format!("csv write failed: {e}"));
        wtr.write_record(&self.header).map_err(wrap)?;
        for r in &self.rows {
            wtr.write_record(r).map_err(wrap)?;
        }
        wtr.flush().map_err(|e| CliError::io("<csv>", e))
    }

    pub fn read_from<R: Read>(r: R) -> CliResult<Self> {
        let mut rdr = csv::Reader::from_reader(r);
        let bad = |e: csv::Error| CliError::Config(format!("csv parse failed: {e}"));
        let header = rdr.headers().map_err(bad)?.iter().map(str::to_string).collect();
        let mut rows = Vec::new();
        for rec in rdr.records() {
            rows.push(rec.map_err(bad)?.iter().map(str::to_string).collect());
        }
        Ok(Self { header, rows })
    }

    pub fn save(&self, path: &Path) -> CliResult<()> {
        let f = File::create(path).map_err(|e| CliError::io(path, e))?;
        self.write_to(BufWriter::new(f))
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let f = File::open(path).map_err(|e| CliError::io(path, e))?;
        Self::read_from(f)
    }
}

pub fn save_json<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::Numerical(e.to_string()))?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| CliError::io(path, e))
}

pub fn load_json<T: DeserializeOwned>(path: &Path) -> CliResult<T> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

//! CSV tables with a header row and finite numeric cells.

use std::path::Path;

#[derive(Debug, thiserror::Error)]
pub enum TableError {
    #[error("row {row} has {got} cells, header has {want}")]
    Width { row: usize, got: usize, want: usize },
    #[error("non-finite value {value} in column `{column}`, row {row}")]
    NonFinite { column: String, row: usize, value: f64 },
    #[error("missing value in column `{column}`, row {row}")]
    Missing { column: String, row: usize },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(u64),
    /// A float that may legitimately be absent; absence is an error.
    Opt(Option<f64>),
    Text(String),
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Num(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as u64)
    }
}

impl From<Option<f64>> for Cell {
    fn from(v: Option<f64>) -> Self {
        Cell::Opt(v)
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Int(u64::from(v))
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Table {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new<S: AsRef<str>>(header: &[S]) -> Self {
        Self { header: header.iter().map(|h| h.as_ref().to_string()).collect(), rows: Vec::new() }
    }

    pub fn header(&self) -> &[String] {
        &self.header
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn push(&mut self, cells: Vec<Cell>) -> Result<(), TableError> {
        let row = self.rows.len() + 1;
        if cells.len() != self.header.len() {
            return Err(TableError::Width { row, got: cells.len(), want: self.header.len() });
        }
        let mut out = Vec::with_capacity(cells.len());
        for (cell, column) in cells.into_iter().zip(&self.header) {
            let value = match cell {
                Cell::Num(v) | Cell::Opt(Some(v)) => v,
                Cell::Opt(None) => return Err(TableError::Missing { column: column.clone(), row }),
                Cell::Int(i) => {
                    out.push(i.to_string());
                    continue;
                }
                Cell::Text(t) => {
                    out.push(t);
                    continue;
                }
            };
            if !value.is_finite() {
                return Err(TableError::NonFinite { column: column.clone(), row, value });
            }
            out.push(format_float(value));
        }
        self.rows.push(out);
        Ok(())
    }

    pub fn to_csv_bytes(&self) -> Result<Vec<u8>, TableError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header)?;
        for r in &self.rows {
            w.write_record(r)?;
        }
        w.into_inner().map_err(|e| TableError::Io(e.into_error()))
    }

    pub fn write(&self, path: &Path) -> Result<(), TableError> {
        std::fs::write(path, self.to_csv_bytes()?)?;
        Ok(())
    }
}

/// Shortest representation that parses back to the same `f64`.
pub fn format_float(v: f64) -> String {
    // Avoid a "-0" cell.
    if v == 0.0 {
        "0".to_string()
    } else {
        v.to_string()
    }
}

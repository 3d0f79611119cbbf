use std::path::Path;
use std::str::FromStr;

use crate::error::{CliError, CliResult};

/// A CSV column chosen by zero-based index or by header name.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Column {
    Index(usize),
    Name(String),
}

impl FromStr for Column {
    type Err = std::convert::Infallible;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s.parse::<usize>() {
            Ok(i) => Column::Index(i),
            Err(_) => Column::Name(s.to_string()),
        })
    }
}

impl std::fmt::Display for Column {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Column::Index(i) => write!(f, "{i}"),
            Column::Name(n) => f.write_str(n),
        }
    }
}

fn parse_cell(cell: &str, line: u64) -> CliResult<f64> {
    if cell.is_empty() {
        return Err(CliError::Data(format!("row {line}: missing value")));
    }
    match cell.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(CliError::Data(format!(
            "row {line}: '{cell}' is not a finite number"
        ))),
    }
}

/// Reads one numeric column of a CSV file and multiplies it by `scale`.
///
/// Selecting the column by name requires a header row. Selecting it by
/// index treats the first row as a header when that cell is not numeric.
/// Errors name the 1-based row of the offending line. Family support is
/// checked later, at fit time.
pub fn ingest_csv(path: &Path, column: &Column, scale: f64) -> CliResult<Vec<f64>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| CliError::Data(format!("cannot read {}: {e}", path.display())))?;
    let mut records = reader.records().peekable();
    let index = match column {
        Column::Name(name) => {
            let header = match records.next() {
                Some(r) => r.map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?,
                None => return Err(CliError::Data(format!("{} is empty", path.display()))),
            };
            header.iter().position(|h| h == name).ok_or_else(|| {
                CliError::Config(format!("no column named '{name}' in {}", path.display()))
            })?
        }
        Column::Index(i) => {
            if let Some(Ok(first)) = records.peek() {
                if first.get(*i).is_some_and(|c| c.parse::<f64>().is_err()) {
                    records.next();
                }
            }
            *i
        }
    };
    let mut out = Vec::new();
    for record in records {
        let record = record.map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
        let line = record.position().map_or(0, |p| p.line());
        let cell = record.get(index).unwrap_or("");
        out.push(parse_cell(cell, line)? * scale);
    }
    if out.is_empty() {
        return Err(CliError::Data(format!(
            "{} has no data rows",
            path.display()
        )));
    }
    Ok(out)
}

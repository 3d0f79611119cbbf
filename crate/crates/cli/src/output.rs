use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::{CliError, CliResult};

fn io_error(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Config(format!("cannot write {}: {e}", path.display()))
}

/// Writes `bytes` to `dir/name` through a temporary file and a rename, so
/// readers never see a partial file.
pub fn write_atomic(dir: &Path, name: &str, bytes: &[u8]) -> CliResult<PathBuf> {
    fs::create_dir_all(dir).map_err(|e| io_error(dir, e))?;
    let target = dir.join(name);
    let tmp = dir.join(format!(".{name}.tmp"));
    fs::write(&tmp, bytes).map_err(|e| io_error(&tmp, e))?;
    fs::rename(&tmp, &target).map_err(|e| io_error(&target, e))?;
    Ok(target)
}

pub fn write_json<T: Serialize>(dir: &Path, name: &str, value: &T) -> CliResult<PathBuf> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| CliError::Numerical(format!("serializing {name}: {e}")))?;
    text.push('\n');
    write_atomic(dir, name, text.as_bytes())
}

/// Writes a CSV with the given header and rows of already formatted cells.
pub fn write_csv(
    dir: &Path,
    name: &str,
    header: &[&str],
    rows: impl IntoIterator<Item = Vec<String>>,
) -> CliResult<PathBuf> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let err = |e: csv::Error| CliError::Numerical(format!("formatting {name}: {e}"));
    w.write_record(header).map_err(err)?;
    for row in rows {
        w.write_record(&row).map_err(err)?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| CliError::Numerical(format!("formatting {name}: {e}")))?;
    write_atomic(dir, name, &bytes)
}

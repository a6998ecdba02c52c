//! Atomic file writes and error-tagged reads.

use std::fs;
use std::io::Write as _;
use std::path::Path;

use crate::error::{CliError, Result};

/// Write `bytes` to `path` via a temp file in the same directory plus rename,
/// so a crash never leaves a truncated file at the final path.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    fs::create_dir_all(dir).map_err(|e| CliError::write(dir, e))?;
    let mut tmp = tempfile::Builder::new()
        .prefix(".almask.")
        .tempfile_in(dir)
        .map_err(|e| CliError::write(path, e))?;
    tmp.write_all(bytes)
        .and_then(|_| tmp.flush())
        .map_err(|e| CliError::write(path, e))?;
    tmp.persist(path).map_err(|e| CliError::write(path, e.error))?;
    Ok(())
}

pub fn read_to_string(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| CliError::read(path, e))
}

pub fn read_bytes(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| CliError::read(path, e))
}

//! Trial record persistence with versioned schema checks.

use std::path::Path;

use almask_core::harness::RECORD_SCHEMA_VERSION;
use almask_core::RunRecord;

use crate::error::{CliError, Result};
use crate::fsio;

pub fn save_run_record(path: &Path, record: &RunRecord) -> Result<()> {
    let mut text = serde_json::to_string_pretty(record).expect("record serializes");
    text.push('\n');
    fsio::write_atomic(path, text.as_bytes())
}

/// Parse failures carry the line/column from the JSON parser.
pub fn load_run_record(path: &Path) -> Result<RunRecord> {
    let text = fsio::read_to_string(path)?;
    let record: RunRecord =
        serde_json::from_str(&text).map_err(|e| CliError::format(path, e.to_string()))?;
    if record.schema_version != RECORD_SCHEMA_VERSION {
        return Err(CliError::format(
            path,
            format!(
                "record schema_version {} is not supported (expected {})",
                record.schema_version, RECORD_SCHEMA_VERSION
            ),
        ));
    }
    Ok(record)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn malformed_json_reports_line_number() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("r.json");
        std::fs::write(&path, "{\n  \"schema_version\": 1,\n  oops\n}").unwrap();
        let err = load_run_record(&path).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("line 3"), "{msg}");
        assert_eq!(err.exit_code(), 2);
    }
}

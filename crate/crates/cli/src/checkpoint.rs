//! Model checkpoints: one JSON document holding the model spec, a layout
//! manifest, and the flat parameter array. Schema documented in the README.

use std::path::Path;

use serde::{Deserialize, Serialize};

use almask_core::{ModelSpec, ModelState};

use crate::error::{CliError, Result};
use crate::fsio;

pub const CHECKPOINT_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SegmentManifest {
    name: String,
    offset: usize,
    len: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CheckpointFile {
    schema_version: u32,
    spec: ModelSpec,
    layout: Vec<SegmentManifest>,
    theta: Vec<f64>,
}

pub fn save_checkpoint(path: &Path, model: &ModelState) -> Result<()> {
    let file = CheckpointFile {
        schema_version: CHECKPOINT_SCHEMA_VERSION,
        spec: model.spec().clone(),
        layout: model
            .layout()
            .segments()
            .iter()
            .map(|s| SegmentManifest {
                name: s.name.clone(),
                offset: s.offset,
                len: s.len,
            })
            .collect(),
        theta: model.theta().to_vec(),
    };
    let mut text = serde_json::to_string_pretty(&file).expect("checkpoint serializes");
    text.push('\n');
    fsio::write_atomic(path, text.as_bytes())
}

/// Load and validate a checkpoint. The stored layout manifest must agree
/// with the layout derived from the stored `ModelSpec`; a stale or
/// hand-edited manifest is rejected rather than silently reinterpreted.
pub fn load_checkpoint(path: &Path) -> Result<ModelState> {
    let text = fsio::read_to_string(path)?;
    let file: CheckpointFile =
        serde_json::from_str(&text).map_err(|e| CliError::format(path, e.to_string()))?;
    if file.schema_version != CHECKPOINT_SCHEMA_VERSION {
        return Err(CliError::format(
            path,
            format!(
                "checkpoint schema_version {} is not supported (expected {})",
                file.schema_version, CHECKPOINT_SCHEMA_VERSION
            ),
        ));
    }
    let derived = derived_manifest(&file.spec).map_err(CliError::Core)?;
    if derived != file.layout {
        return Err(CliError::format(
            path,
            "layout manifest does not match the model's parameter layout".to_owned(),
        ));
    }
    ModelState::from_parts(file.spec, file.theta).map_err(CliError::Core)
}

fn derived_manifest(spec: &ModelSpec) -> almask_core::Result<Vec<SegmentManifest>> {
    Ok(spec
        .layout()?
        .segments()
        .iter()
        .map(|s| SegmentManifest {
            name: s.name.clone(),
            offset: s.offset,
            len: s.len,
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use almask_core::model::init_params;
    use almask_core::{ModelKind, ModelSpec};

    fn sample_model() -> ModelState {
        init_params(&ModelSpec {
            kind: ModelKind::Mlp1,
            d: 4,
            n_classes: 3,
            hidden: Some(5),
            init_scale: 0.1,
            seed: 11,
        })
        .unwrap()
    }

    #[test]
    fn checkpoint_round_trips_bit_exactly() {
        let dir = tempfile::tempdir().unwrap();
        let model = sample_model();
        let path = dir.path().join("model.json");
        save_checkpoint(&path, &model).unwrap();
        let back = load_checkpoint(&path).unwrap();
        assert_eq!(back.theta(), model.theta());
        assert_eq!(back.spec(), model.spec());
        assert_eq!(back.theta_checksum(), model.theta_checksum());
    }

    #[test]
    fn corrupted_layout_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let model = sample_model();
        let path = dir.path().join("model.json");
        save_checkpoint(&path, &model).unwrap();
        let text = std::fs::read_to_string(&path)
            .unwrap()
            .replace("\"W1\"", "\"Wx\"");
        std::fs::write(&path, text).unwrap();
        let err = load_checkpoint(&path).unwrap_err();
        assert!(err.to_string().contains("layout manifest"), "{err}");
    }

    #[test]
    fn wrong_schema_version_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let model = sample_model();
        let path = dir.path().join("model.json");
        save_checkpoint(&path, &model).unwrap();
        let text = std::fs::read_to_string(&path)
            .unwrap()
            .replace("\"schema_version\": 1", "\"schema_version\": 99");
        std::fs::write(&path, text).unwrap();
        let err = load_checkpoint(&path).unwrap_err();
        assert!(err.to_string().contains("schema_version"), "{err}");
    }
}

//! Turns a data source description into loaded pool and test sets.

use std::path::Path;

use almask_core::harness::{resolve_synth, DataSource, DatasetSpec};
use almask_core::{Dataset, ExperimentData, Matrix};

use crate::csv_io;
use crate::error::{CliError, Result};
use crate::idx;

/// Rebuild a loaded dataset under the class count the config declares,
/// so a file that happens to miss the top class still gets the full label
/// space. Labels outside that space are a config error.
fn with_declared_classes(ds: Dataset, n_classes: usize, origin: &str) -> Result<Dataset> {
    let labels = ds.labels().map(<[usize]>::to_vec);
    if let Some(labs) = &labels {
        if let Some(&worst) = labs.iter().max() {
            if worst >= n_classes {
                return Err(CliError::config(format!(
                    "{origin} contains label {worst} but n_classes = {n_classes}"
                )));
            }
        }
    }
    let features = Matrix::from_fn(ds.len(), ds.n_features(), |i, j| ds.feature_row(i)[j]);
    Dataset::new(features, labels, n_classes).map_err(CliError::Core)
}

/// Load (or generate) the pool and test sets a harness run consumes.
/// File paths must already be resolved; see `config::load_config`.
pub fn resolve_data(spec: &DatasetSpec) -> Result<ExperimentData> {
    match &spec.source {
        DataSource::Synth(src) => resolve_synth(src).map_err(CliError::Core),
        DataSource::Idx(src) => {
            let pool = idx::load_idx_pair(
                Path::new(&src.train_images),
                Path::new(&src.train_labels),
            )?;
            let test = idx::load_idx_pair(
                Path::new(&src.test_images),
                Path::new(&src.test_labels),
            )?;
            Ok(ExperimentData {
                pool: with_declared_classes(pool, src.n_classes, &src.train_labels)?,
                test: with_declared_classes(test, src.n_classes, &src.test_labels)?,
            })
        }
        DataSource::Csv(src) => {
            let pool = csv_io::load_csv(Path::new(&src.train), Some(&src.label_column))?;
            let test = csv_io::load_csv(Path::new(&src.test), Some(&src.label_column))?;
            Ok(ExperimentData {
                pool: with_declared_classes(pool, src.n_classes, &src.train)?,
                test: with_declared_classes(test, src.n_classes, &src.test)?,
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use almask_core::harness::{CsvSource, SynthSource};

    #[test]
    fn synth_source_generates_pool_and_test() {
        let spec = DatasetSpec {
            source: DataSource::Synth(SynthSource {
                n_classes: 3,
                d: 4,
                counts: vec![8, 20, 8],
                separation: 3.0,
                seed: 9,
            }),
            subset: None,
        };
        let data = resolve_data(&spec).unwrap();
        assert_eq!(data.pool.len(), 36);
        assert_eq!(data.pool.n_classes(), 3);
        assert!(data.test.len() >= 5 * 20);
    }

    #[test]
    fn csv_source_honors_declared_class_count() {
        let dir = tempfile::tempdir().unwrap();
        let train = dir.path().join("train.csv");
        let test = dir.path().join("test.csv");
        // neither file contains class 3; the config still declares 4 classes
        std::fs::write(&train, "a,b,y\n0,1,0\n1,0,1\n0.5,0.5,2\n").unwrap();
        std::fs::write(&test, "a,b,y\n0,1,0\n1,0,2\n").unwrap();
        let spec = DatasetSpec {
            source: DataSource::Csv(CsvSource {
                train: train.display().to_string(),
                test: test.display().to_string(),
                label_column: "y".into(),
                n_classes: 4,
            }),
            subset: None,
        };
        let data = resolve_data(&spec).unwrap();
        assert_eq!(data.pool.n_classes(), 4);
        assert_eq!(data.test.n_classes(), 4);
    }

    #[test]
    fn out_of_range_label_is_a_config_error() {
        let dir = tempfile::tempdir().unwrap();
        let train = dir.path().join("train.csv");
        let test = dir.path().join("test.csv");
        std::fs::write(&train, "a,b,y\n0,1,0\n1,0,5\n").unwrap();
        std::fs::write(&test, "a,b,y\n0,1,0\n").unwrap();
        let spec = DatasetSpec {
            source: DataSource::Csv(CsvSource {
                train: train.display().to_string(),
                test: test.display().to_string(),
                label_column: "y".into(),
                n_classes: 2,
            }),
            subset: None,
        };
        let err = resolve_data(&spec).unwrap_err();
        assert!(err.to_string().contains("label 5"), "{err}");
        assert_eq!(err.exit_code(), 2);
    }
}

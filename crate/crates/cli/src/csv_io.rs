//! CSV readers and writers for datasets, curves, profiles, and selections.
//!
//! Floats are written with the shortest representation that parses back to
//! the identical value, so a write/reload cycle is lossless.

use std::path::Path;

use almask_core::harness::CurvePoint;
use almask_core::{Dataset, LayerProfile, Matrix, RunRecord};

use crate::error::{CliError, Result};
use crate::fsio;

/// Load a rectangular numeric CSV with a header row. When `label_column`
/// names a header, that column becomes the labels and the rest the features;
/// class count is 1 + the largest label.
pub fn load_csv(path: &Path, label_column: Option<&str>) -> Result<Dataset> {
    let text = fsio::read_to_string(path)?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(text.as_bytes());
    let headers: Vec<String> = reader
        .headers()
        .map_err(|e| CliError::format(path, e.to_string()))?
        .iter()
        .map(str::to_owned)
        .collect();
    let label_idx = match label_column {
        Some(name) => Some(
            headers.iter().position(|h| h == name).ok_or_else(|| {
                CliError::config(format!(
                    "label column `{name}` not found in {}; header has [{}]",
                    path.display(),
                    headers.join(", ")
                ))
            })?,
        ),
        None => None,
    };

    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut labels: Vec<usize> = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let row_no = i + 1; // 1-based data row, header excluded
        let rec = rec.map_err(|e| CliError::format(path, format!("row {row_no}: {e}")))?;
        if rec.len() != headers.len() {
            return Err(CliError::format(
                path,
                format!(
                    "row {row_no} has {} cells, header has {}",
                    rec.len(),
                    headers.len()
                ),
            ));
        }
        let mut feats = Vec::with_capacity(headers.len());
        for (j, cell) in rec.iter().enumerate() {
            if Some(j) == label_idx {
                let lab: usize = cell.trim().parse().map_err(|_| {
                    CliError::format(
                        path,
                        format!(
                            "row {row_no}, column `{}`: `{cell}` is not a class index",
                            headers[j]
                        ),
                    )
                })?;
                labels.push(lab);
            } else {
                let v: f64 = cell.trim().parse().map_err(|_| {
                    CliError::format(
                        path,
                        format!(
                            "row {row_no}, column `{}`: `{cell}` is not numeric",
                            headers[j]
                        ),
                    )
                })?;
                feats.push(v);
            }
        }
        rows.push(feats);
    }

    let d = headers.len() - usize::from(label_idx.is_some());
    let features = Matrix::from_fn(rows.len(), d, |i, j| rows[i][j]);
    let (labels, n_classes) = if label_idx.is_some() {
        let n_classes = labels.iter().copied().max().map_or(1, |m| m + 1);
        (Some(labels), n_classes)
    } else {
        (None, 1)
    };
    Dataset::new(features, labels, n_classes).map_err(CliError::Core)
}

/// Inverse of `load_csv`: features as columns f0..f{d-1}, labels (when
/// present) under `label_column` (default `label`).
pub fn write_dataset_csv(path: &Path, ds: &Dataset, label_column: Option<&str>) -> Result<()> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header: Vec<String> = (0..ds.n_features()).map(|j| format!("f{j}")).collect();
    if ds.labels().is_some() {
        header.push(label_column.unwrap_or("label").to_owned());
    }
    w.write_record(&header).expect("in-memory write");
    for i in 0..ds.len() {
        let mut rec: Vec<String> = ds.feature_row(i).iter().map(|v| format!("{v}")).collect();
        if let Some(lab) = ds.label(i) {
            rec.push(format!("{lab}"));
        }
        w.write_record(&rec).expect("in-memory write");
    }
    fsio::write_atomic(path, &w.into_inner().expect("in-memory flush"))
}

pub const CURVE_HEADER: [&str; 3] = ["labels", "mean_acc", "std_acc"];

pub fn write_curve_csv(path: &Path, curve: &[CurvePoint]) -> Result<()> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(CURVE_HEADER).expect("in-memory write");
    for p in curve {
        w.write_record(&[
            p.labels.to_string(),
            format!("{}", p.mean_acc),
            format!("{}", p.std_acc),
        ])
        .expect("in-memory write");
    }
    fsio::write_atomic(path, &w.into_inner().expect("in-memory flush"))
}

pub fn read_curve_csv(path: &Path) -> Result<Vec<CurvePoint>> {
    let text = fsio::read_to_string(path)?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(text.as_bytes());
    let headers = reader
        .headers()
        .map_err(|e| CliError::format(path, e.to_string()))?
        .clone();
    let got: Vec<&str> = headers.iter().collect();
    if got != CURVE_HEADER {
        return Err(CliError::format(
            path,
            format!("expected header labels,mean_acc,std_acc, found `{}`", got.join(",")),
        ));
    }
    let mut out = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let row_no = i + 1;
        let rec = rec.map_err(|e| CliError::format(path, format!("row {row_no}: {e}")))?;
        let cell = |j: usize| -> Result<&str> {
            rec.get(j).ok_or_else(|| {
                CliError::format(path, format!("row {row_no} is missing column {j}"))
            })
        };
        let parse_f = |j: usize| -> Result<f64> {
            cell(j)?.trim().parse().map_err(|_| {
                CliError::format(
                    path,
                    format!("row {row_no}, column `{}`: not numeric", CURVE_HEADER[j]),
                )
            })
        };
        out.push(CurvePoint {
            labels: cell(0)?.trim().parse().map_err(|_| {
                CliError::format(path, format!("row {row_no}, column `labels`: not an integer"))
            })?,
            mean_acc: parse_f(1)?,
            std_acc: parse_f(2)?,
        });
    }
    if out.is_empty() {
        return Err(CliError::format(path, "no data rows".to_owned()));
    }
    Ok(out)
}

/// One row per (labeled count, strategy), strategies in run order.
pub fn write_comparison_csv(path: &Path, per_strategy: &[(String, Vec<CurvePoint>)]) -> Result<()> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["labels", "strategy", "mean_acc", "std_acc"])
        .expect("in-memory write");
    for (strategy, curve) in per_strategy {
        for p in curve {
            w.write_record(&[
                p.labels.to_string(),
                strategy.clone(),
                format!("{}", p.mean_acc),
                format!("{}", p.std_acc),
            ])
            .expect("in-memory write");
        }
    }
    fsio::write_atomic(path, &w.into_inner().expect("in-memory flush"))
}

pub fn write_profile_csv(path: &Path, profile: &[LayerProfile]) -> Result<()> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["layer", "selected", "total", "fraction"])
        .expect("in-memory write");
    for p in profile {
        w.write_record(&[
            p.layer.clone(),
            p.selected.to_string(),
            p.total.to_string(),
            format!("{}", p.fraction),
        ])
        .expect("in-memory write");
    }
    fsio::write_atomic(path, &w.into_inner().expect("in-memory flush"))
}

/// Every queried sample id across all trials and rounds, in pick order.
pub fn write_selections_csv(path: &Path, records: &[RunRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["trial", "round", "step", "sample_id", "score"])
        .expect("in-memory write");
    for (trial, rec) in records.iter().enumerate() {
        for round in &rec.rounds {
            for (step, sel) in round.chosen.iter().enumerate() {
                w.write_record(&[
                    trial.to_string(),
                    round.round.to_string(),
                    step.to_string(),
                    sel.id.to_string(),
                    format!("{}", sel.score),
                ])
                .expect("in-memory write");
            }
        }
    }
    fsio::write_atomic(path, &w.into_inner().expect("in-memory flush"))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write_tmp(dir: &Path, name: &str, text: &str) -> std::path::PathBuf {
        let p = dir.join(name);
        std::fs::write(&p, text).unwrap();
        p
    }

    #[test]
    fn labeled_load_matches_hand_case() {
        let dir = tempfile::tempdir().unwrap();
        let p = write_tmp(dir.path(), "d.csv", "a,b,y\n0,1,0\n1,0,1\n");
        let ds = load_csv(&p, Some("y")).unwrap();
        assert_eq!(ds.len(), 2);
        assert_eq!(ds.n_features(), 2);
        assert_eq!(ds.labels().unwrap(), &[0, 1]);
        assert_eq!(ds.feature_row(0), &[0.0, 1.0]);
    }

    #[test]
    fn unlabeled_load_keeps_all_columns() {
        let dir = tempfile::tempdir().unwrap();
        let p = write_tmp(dir.path(), "d.csv", "a,b,y\n0,1,0\n1,0,1\n");
        let ds = load_csv(&p, None).unwrap();
        assert_eq!(ds.n_features(), 3);
        assert!(ds.labels().is_none());
    }

    #[test]
    fn bad_cell_cites_row_and_column() {
        let dir = tempfile::tempdir().unwrap();
        let p = write_tmp(dir.path(), "d.csv", "a,b,y\n0,x,0\n");
        let err = load_csv(&p, Some("y")).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("row 1"), "{msg}");
        assert!(msg.contains("`b`"), "{msg}");
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn missing_label_column_is_a_config_error() {
        let dir = tempfile::tempdir().unwrap();
        let p = write_tmp(dir.path(), "d.csv", "a,b\n0,1\n");
        let err = load_csv(&p, Some("y")).unwrap_err();
        assert!(matches!(err, CliError::Config(_)), "{err}");
    }

    #[test]
    fn dataset_round_trips_to_full_precision() {
        let dir = tempfile::tempdir().unwrap();
        let feats = Matrix::from_fn(3, 2, |i, j| {
            (1.0 + i as f64 * 0.3127) / (7.0 + j as f64)
        });
        let ds = Dataset::new(feats, Some(vec![0, 2, 1]), 3).unwrap();
        let p = dir.path().join("d.csv");
        write_dataset_csv(&p, &ds, Some("y")).unwrap();
        let back = load_csv(&p, Some("y")).unwrap();
        assert_eq!(back.len(), ds.len());
        for i in 0..ds.len() {
            assert_eq!(back.feature_row(i), ds.feature_row(i), "row {i} drifted");
            assert_eq!(back.label(i), ds.label(i));
        }
    }

    #[test]
    fn curve_csv_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let curve = vec![
            CurvePoint {
                labels: 10,
                mean_acc: 0.5123,
                std_acc: 0.01,
            },
            CurvePoint {
                labels: 20,
                mean_acc: 2.0 / 3.0,
                std_acc: 0.0,
            },
        ];
        let p = dir.path().join("c.csv");
        write_curve_csv(&p, &curve).unwrap();
        let back = read_curve_csv(&p).unwrap();
        assert_eq!(back.len(), 2);
        assert_eq!(back[1].mean_acc, 2.0 / 3.0);
        assert_eq!(back[0].labels, 10);
    }

    #[test]
    fn empty_curve_csv_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let p = write_tmp(dir.path(), "c.csv", "labels,mean_acc,std_acc\n");
        let err = read_curve_csv(&p).unwrap_err();
        assert!(err.to_string().contains("no data rows"), "{err}");
    }
}

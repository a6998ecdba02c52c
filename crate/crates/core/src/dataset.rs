//! In-memory datasets: validation, synthetic imbalanced generation, and
//! per-class subsetting. File ingestion (IDX, CSV) lives in the CLI crate.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{bail, ensure, Result};
use crate::float;
use crate::linalg::Matrix;
use crate::seed;

/// Feature matrix plus optional class labels and stable per-sample ids.
///
/// Ids are assigned at load/generation time (row indices) and survive
/// subsetting, so selections can always be traced back to source rows.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    features: Matrix,
    labels: Option<Vec<usize>>,
    n_classes: usize,
    ids: Vec<usize>,
}

impl Dataset {
    /// Validating constructor; ids default to `0..rows`.
    pub fn new(features: Matrix, labels: Option<Vec<usize>>, n_classes: usize) -> Result<Self> {
        let ids = (0..features.rows()).collect();
        Self::with_ids(features, labels, n_classes, ids)
    }

    pub fn with_ids(
        features: Matrix,
        labels: Option<Vec<usize>>,
        n_classes: usize,
        ids: Vec<usize>,
    ) -> Result<Self> {
        ensure!(
            features.is_finite(),
            Contract,
            "dataset features contain NaN or Inf"
        );
        ensure!(
            ids.len() == features.rows(),
            Contract,
            "ids length {} does not match row count {}",
            ids.len(),
            features.rows()
        );
        if let Some(ref labels) = labels {
            ensure!(
                labels.len() == features.rows(),
                Contract,
                "labels length {} does not match row count {}",
                labels.len(),
                features.rows()
            );
            ensure!(n_classes >= 1, Contract, "labeled dataset needs n_classes >= 1");
            if let Some(&bad) = labels.iter().find(|&&l| l >= n_classes) {
                bail!(Contract, "label {bad} out of range for {n_classes} classes");
            }
        }
        Ok(Dataset {
            features,
            labels,
            n_classes,
            ids,
        })
    }

    pub fn len(&self) -> usize {
        self.features.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn n_features(&self) -> usize {
        self.features.cols()
    }

    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    pub fn features(&self) -> &Matrix {
        &self.features
    }

    pub fn feature_row(&self, row: usize) -> &[f64] {
        self.features.row(row)
    }

    pub fn labels(&self) -> Option<&[usize]> {
        self.labels.as_deref()
    }

    pub fn label(&self, row: usize) -> Option<usize> {
        self.labels.as_ref().map(|l| l[row])
    }

    pub fn ids(&self) -> &[usize] {
        &self.ids
    }

    pub fn id(&self, row: usize) -> usize {
        self.ids[row]
    }

    /// New dataset keeping only the given row positions (original ids survive).
    pub fn select_rows(&self, rows: &[usize]) -> Dataset {
        let d = self.n_features();
        let mut features = Matrix::zeros(rows.len(), d);
        let mut ids = Vec::with_capacity(rows.len());
        for (out, &r) in rows.iter().enumerate() {
            features.row_mut(out).copy_from_slice(self.feature_row(r));
            ids.push(self.ids[r]);
        }
        let labels = self
            .labels
            .as_ref()
            .map(|l| rows.iter().map(|&r| l[r]).collect());
        Dataset {
            features,
            labels,
            n_classes: self.n_classes,
            ids,
        }
    }

    /// Per-class sample counts; requires labels.
    pub fn class_histogram(&self) -> Result<Vec<usize>> {
        let labels = self
            .labels
            .as_ref()
            .ok_or_else(|| crate::error::err!(Contract, "dataset has no labels"))?;
        let mut hist = vec![0usize; self.n_classes];
        for &l in labels {
            hist[l] += 1;
        }
        Ok(hist)
    }
}

/// Number of samples to retain per class.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ClassCountSpec {
    pub counts: Vec<usize>,
}

impl ClassCountSpec {
    pub fn new(counts: Vec<usize>) -> Self {
        ClassCountSpec { counts }
    }

    pub fn total(&self) -> usize {
        self.counts.iter().sum()
    }
}

impl From<Vec<usize>> for ClassCountSpec {
    fn from(counts: Vec<usize>) -> Self {
        ClassCountSpec { counts }
    }
}

/// Gaussian mixture with one isotropic unit-variance component per class.
///
/// Class means are `separation` times distinct unit vectors equally spaced on
/// the circle spanned by the first two coordinates; remaining coordinates are
/// pure noise. Exactly `counts[c]` samples are drawn per class, deterministic
/// in `seed`.
pub fn synth_gaussian_imbalanced(
    n_classes: usize,
    d: usize,
    counts: &ClassCountSpec,
    separation: f64,
    seed: u64,
) -> Result<Dataset> {
    ensure!(n_classes >= 2, Config, "synth needs n_classes >= 2, got {n_classes}");
    ensure!(d >= 2, Config, "synth needs d >= 2, got {d}");
    ensure!(
        separation > 0.0,
        Config,
        "synth needs separation > 0, got {separation}"
    );
    ensure!(
        counts.counts.len() == n_classes,
        Config,
        "counts length {} does not match n_classes {}",
        counts.counts.len(),
        n_classes
    );

    let total: usize = counts.total();
    let mut rng = seed::rng_from(seed);
    let mut features = Matrix::zeros(total, d);
    let mut labels = Vec::with_capacity(total);
    let mut row = 0;
    for (c, &count) in counts.counts.iter().enumerate() {
        let (mx, my) = class_mean_direction(c, n_classes);
        for _ in 0..count {
            let out = features.row_mut(row);
            for v in out.iter_mut() {
                *v = rng.sample::<f64, _>(StandardNormal);
            }
            out[0] += separation * mx;
            out[1] += separation * my;
            labels.push(c);
            row += 1;
        }
    }
    Dataset::new(features, Some(labels), n_classes)
}

/// Unit vector for class `c` of `n`, equally spaced on the unit circle.
pub fn class_mean_direction(c: usize, n: usize) -> (f64, f64) {
    let angle = core::f64::consts::TAU * c as f64 / n as f64;
    (float::cos(angle), float::sin(angle))
}

/// Uniform without-replacement subset with exactly `counts[c]` samples of each
/// class; output rows keep their original ids and relative order.
pub fn subset_by_class_counts(
    ds: &Dataset,
    counts: &ClassCountSpec,
    seed: u64,
) -> Result<Dataset> {
    let labels = ds
        .labels()
        .ok_or_else(|| crate::error::err!(Contract, "subset requires a labeled dataset"))?;
    ensure!(
        counts.counts.len() == ds.n_classes(),
        Config,
        "counts length {} does not match n_classes {}",
        counts.counts.len(),
        ds.n_classes()
    );

    let mut per_class: Vec<Vec<usize>> = vec![Vec::new(); ds.n_classes()];
    for (row, &l) in labels.iter().enumerate() {
        per_class[l].push(row);
    }

    let mut rng = seed::rng_from(seed);
    let mut keep: Vec<usize> = Vec::with_capacity(counts.total());
    for (c, &want) in counts.counts.iter().enumerate() {
        let avail = per_class[c].len();
        if want > avail {
            bail!(
                Config,
                "class {c}: requested {want} samples but only {avail} available"
            );
        }
        for idx in rand::seq::index::sample(&mut rng, avail, want) {
            keep.push(per_class[c][idx]);
        }
    }
    keep.sort_unstable();
    Ok(ds.select_rows(&keep))
}

/// Human-readable histogram, used in error messages and logs.
pub fn format_histogram(hist: &[usize]) -> String {
    use core::fmt::Write;
    let mut s = String::from("[");
    for (i, h) in hist.iter().enumerate() {
        if i > 0 {
            s.push_str(", ");
        }
        let _ = write!(s, "{h}");
    }
    s.push(']');
    s
}

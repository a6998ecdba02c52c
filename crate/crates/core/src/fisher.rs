//! Fisher information over the flat parameter vector: exact per-parameter
//! diagonals (class expectation, not sampled labels), top-k parameter masks,
//! per-sample masked gradient factors, and their pooled outer products.
//!
//! A gradient factor `V_x` has column `y = sqrt(p(y|x)) * masked grad of
//! log p(y|x)`, so `V_x V_xᵀ` is that sample's masked Fisher contribution.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{ensure, Result};
use crate::float;
use crate::linalg::Matrix;
use crate::model::{MaskPlan, ModelState, ParamLayout};

/// Dense k×k selection state is kept exactly; beyond this the memory and
/// cubic-solve costs are out of scope.
pub const MAX_MASK_DIM: usize = 2048;

/// Per-parameter Fisher information estimates, full length `|θ|`.
#[derive(Debug, Clone, PartialEq)]
pub struct FisherDiagonal {
    values: Vec<f64>,
}

impl FisherDiagonal {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        ensure!(
            values.iter().all(|v| v.is_finite() && *v >= 0.0),
            Numeric,
            "fisher diagonal must be finite and non-negative"
        );
        Ok(FisherDiagonal { values })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Exact Fisher diagonal averaged over `pool`:
/// `(1/T) Σ_i Σ_y p(y|x_i) (∂_j log p(y|x_i))²`.
pub fn fisher_diagonal(model: &ModelState, pool: &Dataset) -> Result<FisherDiagonal> {
    ensure!(!pool.is_empty(), Contract, "fisher diagonal needs a non-empty pool");
    let total = model.layout().total();
    let n = model.spec().n_classes;
    let mut values = vec![0.0; total];
    for row in 0..pool.len() {
        let x = pool.feature_row(row);
        let probs = model.predict_proba(x)?;
        let g = model.grad_logp_all_classes(x)?;
        for j in 0..total {
            let gr = g.row(j);
            let mut acc = 0.0;
            for y in 0..n {
                acc += probs[y] * gr[y] * gr[y];
            }
            values[j] += acc;
        }
    }
    let t = pool.len() as f64;
    for v in &mut values {
        *v /= t;
    }
    FisherDiagonal::new(values)
}

/// Strictly increasing flat parameter indices chosen for dense treatment.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParamMask {
    indices: Vec<usize>,
    total: usize,
}

impl ParamMask {
    /// `indices` must be strictly increasing, in range, and at most
    /// [`MAX_MASK_DIM`] long.
    pub fn from_indices(indices: Vec<usize>, total: usize) -> Result<Self> {
        ensure!(!indices.is_empty(), Contract, "mask cannot be empty");
        ensure!(
            indices.len() <= MAX_MASK_DIM,
            Resource,
            "mask size {} exceeds the dense limit {}",
            indices.len(),
            MAX_MASK_DIM
        );
        for pair in indices.windows(2) {
            ensure!(
                pair[0] < pair[1],
                Contract,
                "mask indices must be strictly increasing"
            );
        }
        ensure!(
            *indices.last().unwrap() < total,
            Contract,
            "mask index {} out of range {total}",
            indices.last().unwrap()
        );
        Ok(ParamMask { indices, total })
    }

    /// All indices of the named layout segments (e.g. the output layer).
    pub fn from_segments(layout: &ParamLayout, names: &[&str]) -> Result<Self> {
        ParamMask::from_indices(layout.indices_of(names), layout.total())
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn total(&self) -> usize {
        self.total
    }
}

/// Keep the `ceil(sparsity * |θ|)` largest-diagonal parameters.
/// Ties break toward the lower flat index.
pub fn build_mask(diag: &FisherDiagonal, sparsity: f64) -> Result<ParamMask> {
    ensure!(
        sparsity > 0.0 && sparsity <= 1.0,
        Config,
        "sparsity must be in (0, 1], got {sparsity}"
    );
    let total = diag.len();
    ensure!(total > 0, Contract, "cannot mask an empty parameter vector");
    let k = float::ceil(sparsity * total as f64) as usize;
    let k = k.clamp(1, total);
    let mut order: Vec<usize> = (0..total).collect();
    order.sort_by(|&a, &b| {
        diag.values[b]
            .partial_cmp(&diag.values[a])
            .expect("finite diagonal")
            .then(a.cmp(&b))
    });
    let mut chosen = order[..k].to_vec();
    chosen.sort_unstable();
    ParamMask::from_indices(chosen, total)
}

/// One sample's masked gradient factor, shape k × n_classes.
#[derive(Debug, Clone)]
pub struct GradFactor {
    pub sample_id: usize,
    v: Matrix,
}

impl GradFactor {
    pub fn v(&self) -> &Matrix {
        &self.v
    }

    pub fn mask_dim(&self) -> usize {
        self.v.rows()
    }

    pub fn n_classes(&self) -> usize {
        self.v.cols()
    }

    /// `V V ᵀ`, the sample's masked Fisher contribution; exactly symmetric.
    pub fn outer(&self) -> Matrix {
        let k = self.v.rows();
        let mut out = Matrix::zeros(k, k);
        out.syrk_upper_acc(&self.v);
        out.mirror_upper();
        out
    }
}

/// Build `V_x` for one sample: masked class-gradient columns scaled by
/// `sqrt(p(y|x))`.
pub fn grad_factor(
    model: &ModelState,
    x: &[f64],
    sample_id: usize,
    plan: &MaskPlan,
) -> Result<GradFactor> {
    let (mut v, probs) = model.masked_grad_with_probs(x, plan)?;
    for r in 0..v.rows() {
        let row = v.row_mut(r);
        for (y, p) in probs.iter().enumerate() {
            row[y] *= float::sqrt(*p);
        }
    }
    Ok(GradFactor { sample_id, v })
}

/// Pool-averaged masked Fisher `(1/T) Σ_x V_x V_xᵀ`; exactly symmetric.
pub fn masked_pool_fisher(
    model: &ModelState,
    pool: &Dataset,
    plan: &MaskPlan,
) -> Result<Matrix> {
    ensure!(!pool.is_empty(), Contract, "masked pool fisher needs a non-empty pool");
    let k = plan.len();
    let mut acc = Matrix::zeros(k, k);
    for row in 0..pool.len() {
        let gf = grad_factor(model, pool.feature_row(row), pool.id(row), plan)?;
        acc.syrk_upper_acc(gf.v());
    }
    acc.mirror_upper();
    acc.scale(1.0 / pool.len() as f64);
    Ok(acc)
}

/// How much of each parameter segment a mask covers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerProfile {
    pub layer: String,
    pub selected: usize,
    pub total: usize,
    pub fraction: f64,
}

/// Per-segment mask coverage, in layout order.
pub fn layer_profile(mask: &ParamMask, layout: &ParamLayout) -> Vec<LayerProfile> {
    layout
        .segments()
        .iter()
        .map(|seg| {
            let lo = mask.indices.partition_point(|&i| i < seg.offset);
            let hi = mask.indices.partition_point(|&i| i < seg.offset + seg.len);
            let selected = hi - lo;
            LayerProfile {
                layer: seg.name.clone(),
                selected,
                total: seg.len,
                fraction: selected as f64 / seg.len as f64,
            }
        })
        .collect()
}

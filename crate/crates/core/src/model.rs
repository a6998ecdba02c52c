//! Small differentiable classifiers with analytic gradients over a flat
//! parameter vector: multinomial softmax regression and a one-hidden-layer
//! ReLU MLP, plus an Adam training loop.
//!
//! The flat layout (`ParamLayout`) is what ties the crate together: Fisher
//! diagonals, masks, and per-sample gradient factors all address parameters
//! by flat index.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{bail, ensure, Result};
use crate::float;
use crate::linalg::Matrix;
use crate::seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    SoftmaxLinear,
    Mlp1,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub kind: ModelKind,
    pub d: usize,
    pub n_classes: usize,
    /// Hidden width; required for `mlp1`, ignored for `softmax_linear`.
    #[serde(default)]
    pub hidden: Option<usize>,
    pub init_scale: f64,
    pub seed: u64,
}

impl ModelSpec {
    pub fn validate(&self) -> Result<()> {
        ensure!(self.d >= 2, Config, "model d must be >= 2, got {}", self.d);
        ensure!(
            self.n_classes >= 2,
            Config,
            "model n_classes must be >= 2, got {}",
            self.n_classes
        );
        ensure!(
            self.init_scale >= 0.0 && self.init_scale.is_finite(),
            Config,
            "init_scale must be finite and >= 0, got {}",
            self.init_scale
        );
        if self.kind == ModelKind::Mlp1 {
            ensure!(
                self.hidden.unwrap_or(0) >= 1,
                Config,
                "mlp1 requires hidden >= 1"
            );
        }
        Ok(())
    }

    fn hidden_dim(&self) -> usize {
        self.hidden.unwrap_or(0)
    }

    pub fn layout(&self) -> Result<ParamLayout> {
        self.validate()?;
        let (d, n, h) = (self.d, self.n_classes, self.hidden_dim());
        let segments = match self.kind {
            ModelKind::SoftmaxLinear => vec![("W", n * d), ("b", n)],
            ModelKind::Mlp1 => vec![("W1", h * d), ("b1", h), ("W2", n * h), ("b2", n)],
        };
        Ok(ParamLayout::from_lengths(&segments))
    }

    /// Segment names that form the network's output layer.
    pub fn last_layer_segments(&self) -> &'static [&'static str] {
        match self.kind {
            ModelKind::SoftmaxLinear => &["W", "b"],
            ModelKind::Mlp1 => &["W2", "b2"],
        }
    }
}

/// One named contiguous block of the flat parameter vector.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Segment {
    pub name: String,
    pub offset: usize,
    pub len: usize,
}

/// Ordered, contiguous, non-overlapping segments covering `0..total`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParamLayout {
    segments: Vec<Segment>,
    total: usize,
}

impl ParamLayout {
    pub fn from_lengths(parts: &[(&str, usize)]) -> Self {
        let mut segments = Vec::with_capacity(parts.len());
        let mut offset = 0;
        for &(name, len) in parts {
            segments.push(Segment {
                name: String::from(name),
                offset,
                len,
            });
            offset += len;
        }
        ParamLayout {
            segments,
            total: offset,
        }
    }

    pub fn total(&self) -> usize {
        self.total
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn segment(&self, name: &str) -> Option<&Segment> {
        self.segments.iter().find(|s| s.name == name)
    }

    /// Segment containing flat index `flat`.
    pub fn segment_of(&self, flat: usize) -> Option<&Segment> {
        self.segments
            .iter()
            .find(|s| flat >= s.offset && flat < s.offset + s.len)
    }

    /// All flat indices belonging to the named segments, ascending.
    pub fn indices_of(&self, names: &[&str]) -> Vec<usize> {
        let mut out = Vec::new();
        for s in &self.segments {
            if names.contains(&s.name.as_str()) {
                out.extend(s.offset..s.offset + s.len);
            }
        }
        out.sort_unstable();
        out
    }
}

/// Immutable trained/initialized model: spec, flat parameters, layout.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelState {
    spec: ModelSpec,
    theta: Vec<f64>,
    layout: ParamLayout,
}

/// Uniform `[-init_scale, +init_scale]` weights, zero biases, seeded.
pub fn init_params(spec: &ModelSpec) -> Result<ModelState> {
    let layout = spec.layout()?;
    let mut theta = vec![0.0; layout.total()];
    let mut rng = seed::rng_from(spec.seed);
    let weight_segments: &[&str] = match spec.kind {
        ModelKind::SoftmaxLinear => &["W"],
        ModelKind::Mlp1 => &["W1", "W2"],
    };
    for seg in layout.segments() {
        if weight_segments.contains(&seg.name.as_str()) {
            for v in &mut theta[seg.offset..seg.offset + seg.len] {
                *v = rng.gen_range(-spec.init_scale..=spec.init_scale);
            }
        }
    }
    Ok(ModelState {
        spec: spec.clone(),
        theta,
        layout,
    })
}

impl ModelState {
    /// Rebuild a state from its spec and a flat parameter vector
    /// (checkpoint loading); validates length and finiteness.
    pub fn from_parts(spec: ModelSpec, theta: Vec<f64>) -> Result<Self> {
        let layout = spec.layout()?;
        ensure!(
            theta.len() == layout.total(),
            Contract,
            "theta length {} does not match layout total {}",
            theta.len(),
            layout.total()
        );
        ensure!(
            theta.iter().all(|v| v.is_finite()),
            Contract,
            "theta contains NaN or Inf"
        );
        Ok(ModelState {
            spec,
            theta,
            layout,
        })
    }

    pub fn spec(&self) -> &ModelSpec {
        &self.spec
    }

    pub fn theta(&self) -> &[f64] {
        &self.theta
    }

    pub fn layout(&self) -> &ParamLayout {
        &self.layout
    }

    /// SHA-256 of the little-endian parameter bytes, hex encoded.
    pub fn theta_checksum(&self) -> String {
        use core::fmt::Write;
        use sha2::{Digest, Sha256};
        let mut hasher = Sha256::new();
        for v in &self.theta {
            hasher.update(v.to_le_bytes());
        }
        let digest = hasher.finalize();
        let mut out = String::with_capacity(64);
        for byte in digest {
            let _ = write!(out, "{byte:02x}");
        }
        out
    }

    fn check_input(&self, x: &[f64]) -> Result<()> {
        ensure!(
            x.len() == self.spec.d,
            Contract,
            "input length {} does not match model d {}",
            x.len(),
            self.spec.d
        );
        Ok(())
    }

    fn seg(&self, name: &str) -> &[f64] {
        let s = self.layout.segment(name).expect("segment exists");
        &self.theta[s.offset..s.offset + s.len]
    }

    pub fn logits(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_input(x)?;
        Ok(self.forward(x).logits)
    }

    /// Softmax probabilities, computed with max subtraction.
    pub fn predict_proba(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_input(x)?;
        Ok(self.forward(x).probs)
    }

    /// `softmax_linear`: the input itself; `mlp1`: post-ReLU hidden activations.
    pub fn penultimate_embedding(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_input(x)?;
        match self.spec.kind {
            ModelKind::SoftmaxLinear => Ok(x.to_vec()),
            ModelKind::Mlp1 => Ok(self.forward(x).hidden.expect("mlp forward").post),
        }
    }

    fn forward(&self, x: &[f64]) -> Forward {
        match self.spec.kind {
            ModelKind::SoftmaxLinear => {
                let (d, n) = (self.spec.d, self.spec.n_classes);
                let w = self.seg("W");
                let b = self.seg("b");
                let mut logits = Vec::with_capacity(n);
                for c in 0..n {
                    logits.push(crate::linalg::dot(&w[c * d..(c + 1) * d], x) + b[c]);
                }
                let probs = softmax(&logits);
                Forward {
                    logits,
                    probs,
                    hidden: None,
                }
            }
            ModelKind::Mlp1 => {
                let (d, n, h) = (self.spec.d, self.spec.n_classes, self.spec.hidden_dim());
                let w1 = self.seg("W1");
                let b1 = self.seg("b1");
                let w2 = self.seg("W2");
                let b2 = self.seg("b2");
                let mut pre = Vec::with_capacity(h);
                for i in 0..h {
                    pre.push(crate::linalg::dot(&w1[i * d..(i + 1) * d], x) + b1[i]);
                }
                // ReLU with subgradient 0 at 0
                let post: Vec<f64> = pre.iter().map(|&v| if v > 0.0 { v } else { 0.0 }).collect();
                let mut logits = Vec::with_capacity(n);
                for c in 0..n {
                    logits.push(crate::linalg::dot(&w2[c * h..(c + 1) * h], &post) + b2[c]);
                }
                let probs = softmax(&logits);
                Forward {
                    logits,
                    probs,
                    hidden: Some(Hidden { pre, post }),
                }
            }
        }
    }

    /// Matrix `G` of shape `|θ| × n_classes`; column `y` is `∇_θ log p(y|x)`.
    pub fn grad_logp_all_classes(&self, x: &[f64]) -> Result<Matrix> {
        self.check_input(x)?;
        let n = self.spec.n_classes;
        let mut g = Matrix::zeros(self.layout.total(), n);
        let fwd = self.forward(x);
        match self.spec.kind {
            ModelKind::SoftmaxLinear => {
                let d = self.spec.d;
                let w_off = self.layout.segment("W").unwrap().offset;
                let b_off = self.layout.segment("b").unwrap().offset;
                for c in 0..n {
                    // ∂ log p(y|x) / ∂ z_c = δ_{cy} − p_c
                    let coeffs: Vec<f64> = (0..n)
                        .map(|y| ((y == c) as u8 as f64) - fwd.probs[c])
                        .collect();
                    for (j, &xj) in x.iter().enumerate() {
                        let row = g.row_mut(w_off + c * d + j);
                        for (out, &co) in row.iter_mut().zip(&coeffs) {
                            *out = co * xj;
                        }
                    }
                    g.row_mut(b_off + c).copy_from_slice(&coeffs);
                }
            }
            ModelKind::Mlp1 => {
                let (d, h) = (self.spec.d, self.spec.hidden_dim());
                let hid = fwd.hidden.as_ref().unwrap();
                let back = self.mlp_backward_all(&fwd.probs, hid);
                let off = |name: &str| self.layout.segment(name).unwrap().offset;
                let (w1o, b1o, w2o, b2o) = (off("W1"), off("b1"), off("W2"), off("b2"));
                for i in 0..h {
                    for (j, &xj) in x.iter().enumerate() {
                        let row = g.row_mut(w1o + i * d + j);
                        for y in 0..n {
                            row[y] = back.dh_gated[(y, i)] * xj;
                        }
                    }
                    let row = g.row_mut(b1o + i);
                    for y in 0..n {
                        row[y] = back.dh_gated[(y, i)];
                    }
                }
                for c in 0..n {
                    for i in 0..h {
                        let row = g.row_mut(w2o + c * h + i);
                        for y in 0..n {
                            row[y] = delta(c, y, fwd.probs[c]) * hid.post[i];
                        }
                    }
                    let row = g.row_mut(b2o + c);
                    for y in 0..n {
                        row[y] = delta(c, y, fwd.probs[c]);
                    }
                }
            }
        }
        Ok(g)
    }

    /// Decode mask indices once so per-sample masked gradients are O(k·n).
    pub fn mask_plan(&self, indices: &[usize]) -> Result<MaskPlan> {
        let total = self.layout.total();
        let mut entries = Vec::with_capacity(indices.len());
        let mut prev: Option<usize> = None;
        for &flat in indices {
            ensure!(flat < total, Contract, "mask index {flat} out of range {total}");
            if let Some(p) = prev {
                ensure!(p < flat, Contract, "mask indices must be strictly increasing");
            }
            prev = Some(flat);
            let seg = self.layout.segment_of(flat).unwrap();
            let local = flat - seg.offset;
            let (d, h) = (self.spec.d, self.spec.hidden_dim());
            let entry = match seg.name.as_str() {
                "W" => PlanEntry::LinW {
                    class: local / d,
                    feat: local % d,
                },
                "b" => PlanEntry::LinB { class: local },
                "W1" => PlanEntry::W1 {
                    unit: local / d,
                    feat: local % d,
                },
                "b1" => PlanEntry::B1 { unit: local },
                "W2" => PlanEntry::W2 {
                    class: local / h,
                    unit: local % h,
                },
                "b2" => PlanEntry::B2 { class: local },
                other => bail!(Contract, "unknown segment {other}"),
            };
            entries.push(entry);
        }
        Ok(MaskPlan { entries })
    }

    /// Masked `∇_θ log p(y|x)` for every class (k×n) plus the probabilities.
    pub(crate) fn masked_grad_with_probs(
        &self,
        x: &[f64],
        plan: &MaskPlan,
    ) -> Result<(Matrix, Vec<f64>)> {
        self.check_input(x)?;
        let n = self.spec.n_classes;
        let fwd = self.forward(x);
        let mut g = Matrix::zeros(plan.entries.len(), n);
        match self.spec.kind {
            ModelKind::SoftmaxLinear => {
                for (r, entry) in plan.entries.iter().enumerate() {
                    let row = g.row_mut(r);
                    match *entry {
                        PlanEntry::LinW { class, feat } => {
                            for y in 0..n {
                                row[y] = delta(class, y, fwd.probs[class]) * x[feat];
                            }
                        }
                        PlanEntry::LinB { class } => {
                            for y in 0..n {
                                row[y] = delta(class, y, fwd.probs[class]);
                            }
                        }
                        _ => bail!(Contract, "mask entry does not match softmax_linear layout"),
                    }
                }
            }
            ModelKind::Mlp1 => {
                let hid = fwd.hidden.as_ref().unwrap();
                let back = self.mlp_backward_all(&fwd.probs, hid);
                for (r, entry) in plan.entries.iter().enumerate() {
                    let row = g.row_mut(r);
                    match *entry {
                        PlanEntry::W1 { unit, feat } => {
                            for y in 0..n {
                                row[y] = back.dh_gated[(y, unit)] * x[feat];
                            }
                        }
                        PlanEntry::B1 { unit } => {
                            for y in 0..n {
                                row[y] = back.dh_gated[(y, unit)];
                            }
                        }
                        PlanEntry::W2 { class, unit } => {
                            for y in 0..n {
                                row[y] = delta(class, y, fwd.probs[class]) * hid.post[unit];
                            }
                        }
                        PlanEntry::B2 { class } => {
                            for y in 0..n {
                                row[y] = delta(class, y, fwd.probs[class]);
                            }
                        }
                        _ => bail!(Contract, "mask entry does not match mlp1 layout"),
                    }
                }
            }
        }
        Ok((g, fwd.probs))
    }

    /// For each target class y: gate ⊙ (W2ᵀ (e_y − p)), as an n×h matrix.
    fn mlp_backward_all(&self, probs: &[f64], hid: &Hidden) -> MlpBackward {
        let (n, h) = (self.spec.n_classes, self.spec.hidden_dim());
        let w2 = self.seg("W2");
        let mut dh_gated = Matrix::zeros(n, h);
        for y in 0..n {
            let row = dh_gated.row_mut(y);
            for c in 0..n {
                let dz = delta(c, y, probs[c]);
                if dz == 0.0 {
                    continue;
                }
                for (i, out) in row.iter_mut().enumerate() {
                    *out += dz * w2[c * h + i];
                }
            }
            for (i, out) in row.iter_mut().enumerate() {
                if hid.pre[i] <= 0.0 {
                    *out = 0.0;
                }
            }
        }
        MlpBackward { dh_gated }
    }
}

#[inline]
fn delta(c: usize, y: usize, p_c: f64) -> f64 {
    ((c == y) as u8 as f64) - p_c
}

struct Forward {
    logits: Vec<f64>,
    probs: Vec<f64>,
    hidden: Option<Hidden>,
}

struct Hidden {
    pre: Vec<f64>,
    post: Vec<f64>,
}

struct MlpBackward {
    /// row y = gate ⊙ W2ᵀ(e_y − p)
    dh_gated: Matrix,
}

/// Decoded mask indices for fast per-sample masked gradients.
#[derive(Debug, Clone)]
pub struct MaskPlan {
    entries: Vec<PlanEntry>,
}

impl MaskPlan {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

#[derive(Debug, Clone, Copy)]
enum PlanEntry {
    LinW { class: usize, feat: usize },
    LinB { class: usize },
    W1 { unit: usize, feat: usize },
    B1 { unit: usize },
    W2 { class: usize, unit: usize },
    B2 { class: usize },
}

fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut out: Vec<f64> = logits.iter().map(|&z| float::exp(z - max)).collect();
    let sum: f64 = out.iter().sum();
    for v in &mut out {
        *v /= sum;
    }
    out
}

/// Mean cross-entropy (natural log) and its gradient over a batch.
pub fn loss_and_grad(
    m: &ModelState,
    features: &Matrix,
    labels: &[usize],
) -> Result<(f64, Vec<f64>)> {
    ensure!(!labels.is_empty(), Contract, "empty batch");
    ensure!(
        features.rows() == labels.len(),
        Contract,
        "batch features rows {} != labels {}",
        features.rows(),
        labels.len()
    );
    let rows: Vec<usize> = (0..labels.len()).collect();
    let mut grad = vec![0.0; m.layout.total()];
    let loss = accumulate_loss_grad(m, features, labels, &rows, &mut grad)?;
    Ok((loss, grad))
}

/// Sum of per-sample CE loss/gradients over `rows`, divided by `rows.len()`.
fn accumulate_loss_grad(
    m: &ModelState,
    features: &Matrix,
    labels: &[usize],
    rows: &[usize],
    grad: &mut [f64],
) -> Result<f64> {
    let n = m.spec.n_classes;
    let count = rows.len() as f64;
    let mut loss = 0.0;
    for &r in rows {
        let x = features.row(r);
        let y = labels[r];
        ensure!(y < n, Contract, "label {y} out of range for {n} classes");
        let fwd = m.forward(x);
        // log p_y via log-sum-exp
        let max = fwd.logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let lse = max + float::ln(fwd.logits.iter().map(|&z| float::exp(z - max)).sum());
        loss += lse - fwd.logits[y];
        // dL/dz = p − e_y
        match m.spec.kind {
            ModelKind::SoftmaxLinear => {
                let d = m.spec.d;
                let w_off = m.layout.segment("W").unwrap().offset;
                let b_off = m.layout.segment("b").unwrap().offset;
                for c in 0..n {
                    let dz = fwd.probs[c] - ((c == y) as u8 as f64);
                    for (j, &xj) in x.iter().enumerate() {
                        grad[w_off + c * d + j] += dz * xj;
                    }
                    grad[b_off + c] += dz;
                }
            }
            ModelKind::Mlp1 => {
                let (d, h) = (m.spec.d, m.spec.hidden_dim());
                let hid = fwd.hidden.as_ref().unwrap();
                let w2 = m.seg("W2");
                let off = |name: &str| m.layout.segment(name).unwrap().offset;
                let (w1o, b1o, w2o, b2o) = (off("W1"), off("b1"), off("W2"), off("b2"));
                let mut dpre = vec![0.0; h];
                for c in 0..n {
                    let dz = fwd.probs[c] - ((c == y) as u8 as f64);
                    for i in 0..h {
                        grad[w2o + c * h + i] += dz * hid.post[i];
                        dpre[i] += dz * w2[c * h + i];
                    }
                    grad[b2o + c] += dz;
                }
                for i in 0..h {
                    if hid.pre[i] <= 0.0 {
                        dpre[i] = 0.0;
                    }
                }
                for (i, &dp) in dpre.iter().enumerate() {
                    if dp == 0.0 {
                        continue;
                    }
                    for (j, &xj) in x.iter().enumerate() {
                        grad[w1o + i * d + j] += dp * xj;
                    }
                    grad[b1o + i] += dp;
                }
            }
        }
    }
    for g in grad.iter_mut() {
        *g /= count;
    }
    Ok(loss / count)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    pub adam_eps: f64,
    pub seed: u64,
    /// false: re-initialize from the model's init seed before training (fresh
    /// retrain per round); true: continue from the given parameters.
    pub warm_start: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 0.001,
            epochs: 50,
            batch_size: 32,
            adam_beta1: 0.9,
            adam_beta2: 0.999,
            adam_eps: 1e-8,
            seed: 0,
            warm_start: false,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        ensure!(
            self.learning_rate > 0.0,
            Config,
            "learning_rate must be > 0, got {}",
            self.learning_rate
        );
        ensure!(self.epochs >= 1, Config, "epochs must be >= 1");
        ensure!(self.batch_size >= 1, Config, "batch_size must be >= 1");
        Ok(())
    }
}

/// Adam over shuffled mini-batches; deterministic in (spec seed, data, cfg seed).
pub fn train(m: &ModelState, labeled: &Dataset, cfg: &TrainConfig) -> Result<ModelState> {
    Ok(train_traced(m, labeled, cfg)?.0)
}

/// Like [`train`], also returning the mean training loss per epoch.
pub fn train_traced(
    m: &ModelState,
    labeled: &Dataset,
    cfg: &TrainConfig,
) -> Result<(ModelState, Vec<f64>)> {
    cfg.validate()?;
    ensure!(!labeled.is_empty(), Contract, "cannot train on an empty labeled set");
    let labels = labeled
        .labels()
        .ok_or_else(|| crate::error::err!(Contract, "cannot train on an unlabeled dataset"))?;
    ensure!(
        labeled.n_features() == m.spec.d,
        Contract,
        "dataset has {} features but model d = {}",
        labeled.n_features(),
        m.spec.d
    );

    let mut state = if cfg.warm_start {
        m.clone()
    } else {
        init_params(&m.spec)?
    };

    let total = state.layout.total();
    let mut adam_m = vec![0.0; total];
    let mut adam_v = vec![0.0; total];
    let mut grad = vec![0.0; total];
    let mut step = 0u32;

    let mut order: Vec<usize> = (0..labeled.len()).collect();
    let mut rng = seed::rng_from(cfg.seed);
    let mut epoch_losses = Vec::with_capacity(cfg.epochs);

    for _ in 0..cfg.epochs {
        order.shuffle(&mut rng);
        let mut epoch_loss_sum = 0.0;
        for batch in order.chunks(cfg.batch_size) {
            grad.iter_mut().for_each(|g| *g = 0.0);
            let loss =
                accumulate_loss_grad(&state, labeled.features(), labels, batch, &mut grad)?;
            epoch_loss_sum += loss * batch.len() as f64;
            step += 1;
            let bc1 = 1.0 - float::powi(cfg.adam_beta1, step as i32);
            let bc2 = 1.0 - float::powi(cfg.adam_beta2, step as i32);
            for i in 0..total {
                adam_m[i] = cfg.adam_beta1 * adam_m[i] + (1.0 - cfg.adam_beta1) * grad[i];
                adam_v[i] = cfg.adam_beta2 * adam_v[i] + (1.0 - cfg.adam_beta2) * grad[i] * grad[i];
                let m_hat = adam_m[i] / bc1;
                let v_hat = adam_v[i] / bc2;
                state.theta[i] -= cfg.learning_rate * m_hat / (float::sqrt(v_hat) + cfg.adam_eps);
            }
        }
        epoch_losses.push(epoch_loss_sum / labeled.len() as f64);
    }

    ensure!(
        state.theta.iter().all(|v| v.is_finite()),
        Numeric,
        "training produced non-finite parameters"
    );
    Ok((state, epoch_losses))
}

/// Index of the largest score; ties go to the lowest index.
pub fn argmax_class(scores: &[f64]) -> usize {
    let mut best = 0;
    for (i, &s) in scores.iter().enumerate().skip(1) {
        if s > scores[best] {
            best = i;
        }
    }
    best
}

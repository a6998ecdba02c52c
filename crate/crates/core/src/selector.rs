//! Batch selection strategies. The information-based path scores each
//! candidate by how much adding its gradient factor would shrink the trace
//! of `M⁻¹ F_pool`, using low-rank (Woodbury) updates of `M⁻¹` so a greedy
//! batch costs one small `n×n` solve per candidate per step.
//!
//! Tie handling is uniform everywhere: equal scores go to the lowest
//! sample id.

use alloc::vec::Vec;

use core::fmt;
use core::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{ensure, err, Error, Result};
use crate::fisher::{grad_factor, masked_pool_fisher, GradFactor, ParamMask};
use crate::float;
use crate::linalg::{squared_distance, Matrix};
use crate::model::{MaskPlan, ModelState};
use crate::seed;

/// Rebuild `M⁻¹` from scratch after this many rank-n updates to stop
/// round-off drift from accumulating.
pub const REFRESH_INTERVAL: usize = 256;

/// Candidate gradient factors are precomputed when the whole set fits in
/// this many f64 entries; otherwise they are recomputed per greedy step.
const GRAD_CACHE_LIMIT: usize = 8_000_000;

/// One picked sample and the strategy score it was picked at.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Selection {
    pub id: usize,
    pub score: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StrategyId {
    FisherMask,
    Bait,
    Entropy,
    Margin,
    KCenter,
    Random,
}

impl StrategyId {
    pub const ALL: [StrategyId; 6] = [
        StrategyId::FisherMask,
        StrategyId::Bait,
        StrategyId::Entropy,
        StrategyId::Margin,
        StrategyId::KCenter,
        StrategyId::Random,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            StrategyId::FisherMask => "fishermask",
            StrategyId::Bait => "bait",
            StrategyId::Entropy => "entropy",
            StrategyId::Margin => "margin",
            StrategyId::KCenter => "kcenter",
            StrategyId::Random => "random",
        }
    }
}

impl fmt::Display for StrategyId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for StrategyId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        StrategyId::ALL
            .into_iter()
            .find(|id| id.as_str() == s)
            .ok_or_else(|| {
                err!(
                    Config,
                    "unknown strategy {s:?}; expected one of fishermask, bait, entropy, margin, kcenter, random"
                )
            })
    }
}

/// Greedy-selection working set: the regularized matrix `M`, its maintained
/// inverse, and the pool Fisher target the trace objective is measured on.
#[derive(Debug, Clone)]
pub struct SelectionState {
    m: Matrix,
    m_inv: Matrix,
    f_pool: Matrix,
    plan: MaskPlan,
    mask: ParamMask,
    updates_since_refresh: usize,
}

impl SelectionState {
    pub fn m(&self) -> &Matrix {
        &self.m
    }

    pub fn m_inv(&self) -> &Matrix {
        &self.m_inv
    }

    pub fn f_pool(&self) -> &Matrix {
        &self.f_pool
    }

    pub fn mask(&self) -> &ParamMask {
        &self.mask
    }

    pub fn plan(&self) -> &MaskPlan {
        &self.plan
    }
}

/// `M = λ·F_pool + mean labeled outer product + 1e-6·I`, plus its inverse.
pub fn init_selection_state(
    model: &ModelState,
    pool: &Dataset,
    labeled: &Dataset,
    mask: &ParamMask,
    lambda: f64,
) -> Result<SelectionState> {
    ensure!(
        lambda > 0.0 && lambda.is_finite(),
        Config,
        "lambda must be finite and > 0, got {lambda}"
    );
    ensure!(!labeled.is_empty(), Contract, "selection needs a non-empty labeled set");
    let plan = model.mask_plan(mask.indices())?;
    let f_pool = masked_pool_fisher(model, pool, &plan)?;
    let labeled_term = masked_pool_fisher(model, labeled, &plan)?;
    let mut m = f_pool.clone();
    m.scale(lambda);
    m.add_scaled(&labeled_term, 1.0);
    m.add_diagonal(1e-6);
    let m_inv = m.spd_inverse()?;
    Ok(SelectionState {
        m,
        m_inv,
        f_pool,
        plan,
        mask: mask.clone(),
        updates_since_refresh: 0,
    })
}

/// Trace reduction a candidate factor `V` would give:
/// `tr(Vᵀ M⁻¹ F_pool M⁻¹ V A⁻¹)` with `A = I + Vᵀ M⁻¹ V`.
pub fn score_candidate(st: &SelectionState, v: &Matrix) -> Result<f64> {
    let b = st.m_inv.mul(v);
    let fb = st.f_pool.mul(&b);
    let s = b.t_mul(&fb);
    let mut a = v.t_mul(&b);
    a.add_diagonal(1.0);
    let a_inv = a.spd_inverse()?;
    let score = s.trace_product(&a_inv);
    ensure!(score.is_finite(), Numeric, "candidate score is not finite");
    Ok(score)
}

/// Fold `V Vᵀ` into `M` and rank-n-update `M⁻¹`; refresh by direct
/// inversion every [`REFRESH_INTERVAL`] calls.
pub fn woodbury_update(st: &mut SelectionState, v: &Matrix) -> Result<()> {
    ensure!(
        v.rows() == st.m.rows(),
        Contract,
        "factor has {} rows but the mask dimension is {}",
        v.rows(),
        st.m.rows()
    );
    let b = st.m_inv.mul(v);
    let mut a = v.t_mul(&b);
    a.add_diagonal(1.0);
    let a_inv = a.spd_inverse()?;
    let d = b.mul(&a_inv);
    // M⁻¹ −= B A⁻¹ Bᵀ, built upper-then-mirror so it stays exactly symmetric
    let k = st.m_inv.rows();
    for i in 0..k {
        for j in i..k {
            let corr = crate::linalg::dot(d.row(i), b.row(j));
            st.m_inv[(i, j)] -= corr;
        }
    }
    st.m_inv.mirror_upper();

    st.m.syrk_upper_acc(v);
    st.m.mirror_upper();

    st.updates_since_refresh += 1;
    if st.updates_since_refresh >= REFRESH_INTERVAL {
        st.m_inv = st.m.spd_inverse()?;
        st.updates_since_refresh = 0;
    }
    Ok(())
}

/// Greedy trace-objective batch from `candidates`, mutating the state as
/// picks accumulate. Used by the masked-Fisher strategy and, with an
/// output-layer mask, by the last-layer baseline.
pub fn select_batch_greedy(
    st: &mut SelectionState,
    model: &ModelState,
    candidates: &Dataset,
    batch: usize,
) -> Result<Vec<Selection>> {
    check_batch(candidates, batch)?;
    let plan = st.plan.clone();
    let k = plan.len();
    let n = model.spec().n_classes;
    let cache_entries = candidates
        .len()
        .saturating_mul(k)
        .saturating_mul(n);
    let cache: Option<Vec<GradFactor>> = if cache_entries <= GRAD_CACHE_LIMIT {
        let mut all = Vec::with_capacity(candidates.len());
        for row in 0..candidates.len() {
            all.push(grad_factor(
                model,
                candidates.feature_row(row),
                candidates.id(row),
                &plan,
            )?);
        }
        Some(all)
    } else {
        None
    };

    let factor_for = |row: usize| -> Result<GradFactor> {
        match &cache {
            Some(c) => Ok(c[row].clone()),
            None => grad_factor(model, candidates.feature_row(row), candidates.id(row), &plan),
        }
    };

    let mut remaining: Vec<usize> = (0..candidates.len()).collect();
    let mut out = Vec::with_capacity(batch);
    for _ in 0..batch {
        let mut best: Option<(usize, f64, usize)> = None;
        for (pos, &row) in remaining.iter().enumerate() {
            let gf = factor_for(row)?;
            let score = score_candidate(st, gf.v())?;
            let id = candidates.id(row);
            let take = match best {
                None => true,
                Some((_, bs, bid)) => score > bs || (score == bs && id < bid),
            };
            if take {
                best = Some((pos, score, id));
            }
        }
        let (pos, score, id) = best.expect("candidates checked non-empty");
        let row = remaining[pos];
        let gf = factor_for(row)?;
        woodbury_update(st, gf.v())?;
        remaining.swap_remove(pos);
        out.push(Selection { id, score });
    }
    Ok(out)
}

/// Shannon entropy in bits; `0·log 0` contributes 0.
pub fn entropy_bits(p: &[f64]) -> f64 {
    let mut h = 0.0;
    for &v in p {
        if v > 0.0 {
            h -= v * float::log2(v);
        }
    }
    h
}

/// Gap between the two largest probabilities.
pub fn margin(p: &[f64]) -> f64 {
    debug_assert!(p.len() >= 2);
    let (mut top, mut second) = (f64::NEG_INFINITY, f64::NEG_INFINITY);
    for &v in p {
        if v > top {
            second = top;
            top = v;
        } else if v > second {
            second = v;
        }
    }
    top - second
}

fn check_batch(candidates: &Dataset, batch: usize) -> Result<()> {
    ensure!(batch >= 1, Contract, "batch size must be >= 1");
    ensure!(
        batch <= candidates.len(),
        Contract,
        "batch {batch} exceeds candidate count {}",
        candidates.len()
    );
    Ok(())
}

/// Top-`batch` by a per-sample score. `descending` picks large scores first;
/// equal scores go to the lowest id either way.
fn rank_by_score(
    candidates: &Dataset,
    batch: usize,
    descending: bool,
    mut score_of: impl FnMut(&[f64]) -> f64,
    model: &ModelState,
) -> Result<Vec<Selection>> {
    check_batch(candidates, batch)?;
    let mut scored = Vec::with_capacity(candidates.len());
    for row in 0..candidates.len() {
        let p = model.predict_proba(candidates.feature_row(row))?;
        let score = score_of(&p);
        ensure!(score.is_finite(), Numeric, "ranking score is not finite");
        scored.push(Selection {
            id: candidates.id(row),
            score,
        });
    }
    scored.sort_by(|a, b| {
        let ord = if descending {
            b.score.partial_cmp(&a.score)
        } else {
            a.score.partial_cmp(&b.score)
        };
        ord.expect("finite scores").then(a.id.cmp(&b.id))
    });
    scored.truncate(batch);
    Ok(scored)
}

/// Highest predictive entropy first.
pub fn select_entropy(
    model: &ModelState,
    candidates: &Dataset,
    batch: usize,
) -> Result<Vec<Selection>> {
    rank_by_score(candidates, batch, true, entropy_bits, model)
}

/// Smallest top-two probability gap first.
pub fn select_margin(
    model: &ModelState,
    candidates: &Dataset,
    batch: usize,
) -> Result<Vec<Selection>> {
    rank_by_score(candidates, batch, false, margin, model)
}

/// Greedy 2-approximate k-center on penultimate embeddings: repeatedly take
/// the candidate farthest from every center picked so far (labeled points
/// seed the centers). Scores are the Euclidean distances achieved.
pub fn select_kcenter(
    model: &ModelState,
    candidates: &Dataset,
    labeled: &Dataset,
    batch: usize,
) -> Result<Vec<Selection>> {
    check_batch(candidates, batch)?;
    ensure!(!labeled.is_empty(), Contract, "k-center needs at least one labeled sample");
    let mut cand_emb = Vec::with_capacity(candidates.len());
    for row in 0..candidates.len() {
        cand_emb.push(model.penultimate_embedding(candidates.feature_row(row))?);
    }
    let mut min_sq = alloc::vec![f64::INFINITY; candidates.len()];
    for row in 0..labeled.len() {
        let center = model.penultimate_embedding(labeled.feature_row(row))?;
        for (i, emb) in cand_emb.iter().enumerate() {
            let d2 = squared_distance(emb, center.as_slice());
            if d2 < min_sq[i] {
                min_sq[i] = d2;
            }
        }
    }
    let mut taken = alloc::vec![false; candidates.len()];
    let mut out = Vec::with_capacity(batch);
    for _ in 0..batch {
        let mut best: Option<(usize, f64, usize)> = None;
        for i in 0..candidates.len() {
            if taken[i] {
                continue;
            }
            let id = candidates.id(i);
            let take = match best {
                None => true,
                Some((_, bs, bid)) => min_sq[i] > bs || (min_sq[i] == bs && id < bid),
            };
            if take {
                best = Some((i, min_sq[i], id));
            }
        }
        let (i, d2, id) = best.expect("candidates checked non-empty");
        taken[i] = true;
        out.push(Selection {
            id,
            score: float::sqrt(d2),
        });
        for j in 0..candidates.len() {
            if taken[j] {
                continue;
            }
            let d2 = squared_distance(&cand_emb[j], &cand_emb[i]);
            if d2 < min_sq[j] {
                min_sq[j] = d2;
            }
        }
    }
    Ok(out)
}

/// Uniform draw without replacement; scores are 0.
pub fn select_random(candidates: &Dataset, batch: usize, seed_value: u64) -> Result<Vec<Selection>> {
    check_batch(candidates, batch)?;
    let mut rng = seed::rng_from(seed_value);
    let picks = rand::seq::index::sample(&mut rng, candidates.len(), batch);
    Ok(picks
        .into_iter()
        .map(|row| Selection {
            id: candidates.id(row),
            score: 0.0,
        })
        .collect())
}

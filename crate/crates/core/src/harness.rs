//! The experiment loop: seed a labeled set, train, then alternate
//! select/label/retrain/evaluate for a fixed label budget. Every random
//! draw is derived from the trial seed with a stage tag, so a run is a pure
//! function of (config, data, trial seed) and can be replayed bit for bit.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::dataset::{subset_by_class_counts, synth_gaussian_imbalanced, ClassCountSpec, Dataset};
use crate::error::{ensure, Result};
use crate::fisher::{build_mask, fisher_diagonal, layer_profile, LayerProfile, ParamMask};
use crate::float;
use crate::model::{argmax_class, init_params, train, ModelSpec, ModelState, TrainConfig};
use crate::seed;
use crate::selector::{
    init_selection_state, select_batch_greedy, select_entropy, select_kcenter, select_margin,
    select_random, Selection, StrategyId,
};

/// Wall-time source, injected so the loop itself stays IO-free.
pub trait Clock {
    fn now_secs(&self) -> f64;
}

/// Always reads 0; record timings become 0 and comparisons ignore them.
pub struct NullClock;

impl Clock for NullClock {
    fn now_secs(&self) -> f64 {
        0.0
    }
}

/// In-memory Gaussian mixture recipe.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthSource {
    pub n_classes: usize,
    pub d: usize,
    pub counts: Vec<usize>,
    pub separation: f64,
    pub seed: u64,
}

/// Binary image/label file pair (big-endian magic-tagged format).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IdxPairSource {
    pub train_images: String,
    pub train_labels: String,
    pub test_images: String,
    pub test_labels: String,
    pub n_classes: usize,
}

/// Numeric CSV pair with a named label column.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CsvSource {
    pub train: String,
    pub test: String,
    pub label_column: String,
    pub n_classes: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DataSource {
    Synth(SynthSource),
    Idx(IdxPairSource),
    Csv(CsvSource),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetSpec {
    pub source: DataSource,
    /// Optional per-class cap resampled fresh for every trial.
    #[serde(default)]
    pub subset: Option<ClassCountSpec>,
}

fn default_sparsity() -> f64 {
    0.002
}

fn default_lambda() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub strategy: StrategyId,
    pub data: DatasetSpec,
    pub model: ModelSpec,
    #[serde(default)]
    pub train: TrainConfig,
    pub n_initial: usize,
    pub batch_per_round: usize,
    /// Total labels at the end of the run, initial set included.
    pub budget: usize,
    pub trials: usize,
    pub base_seed: u64,
    /// Fraction of parameters kept by the information mask.
    #[serde(default = "default_sparsity")]
    pub sparsity: f64,
    /// Weight of the pool Fisher term in the regularized matrix.
    #[serde(default = "default_lambda")]
    pub lambda: f64,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        self.model.validate()?;
        self.train.validate()?;
        ensure!(self.n_initial >= 1, Config, "n_initial must be >= 1");
        ensure!(self.batch_per_round >= 1, Config, "batch_per_round must be >= 1");
        ensure!(
            self.budget >= self.n_initial,
            Config,
            "budget {} is below n_initial {}",
            self.budget,
            self.n_initial
        );
        ensure!(self.trials >= 1, Config, "trials must be >= 1");
        ensure!(
            self.sparsity > 0.0 && self.sparsity <= 1.0,
            Config,
            "sparsity must be in (0, 1], got {}",
            self.sparsity
        );
        ensure!(
            self.lambda > 0.0 && self.lambda.is_finite(),
            Config,
            "lambda must be finite and > 0, got {}",
            self.lambda
        );
        Ok(())
    }

    /// Selection rounds after the initial draw; a budget remainder smaller
    /// than one batch is left unspent.
    pub fn rounds(&self) -> usize {
        (self.budget - self.n_initial) / self.batch_per_round
    }
}

/// Labeled pool plus held-out labeled test split, resolved and in memory.
#[derive(Debug, Clone)]
pub struct ExperimentData {
    pub pool: Dataset,
    pub test: Dataset,
}

/// Materialize a synthetic source: the train pool exactly as configured,
/// and a balanced test split (about five times the largest class count in
/// total) drawn under a dedicated seed so it is fixed across trials.
pub fn resolve_synth(src: &SynthSource) -> Result<ExperimentData> {
    let counts = ClassCountSpec::new(src.counts.clone());
    let pool = synth_gaussian_imbalanced(src.n_classes, src.d, &counts, src.separation, src.seed)?;
    let max_count = src.counts.iter().copied().max().unwrap_or(0);
    ensure!(max_count > 0, Config, "synthetic counts must not all be zero");
    let per_class = (5 * max_count).div_ceil(src.n_classes).max(1);
    let test_counts = ClassCountSpec::new(alloc::vec![per_class; src.n_classes]);
    let test = synth_gaussian_imbalanced(
        src.n_classes,
        src.d,
        &test_counts,
        src.separation,
        seed::mix(src.seed, seed::TAG_SYNTH_TEST),
    )?;
    Ok(ExperimentData { pool, test })
}

/// One accuracy measurement after a (re)train, with what was added.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundEntry {
    pub round: usize,
    pub labeled_count: usize,
    pub accuracy: f64,
    pub wall_secs: f64,
    /// Round 0: the seed labels (score 0); later rounds: strategy picks.
    pub chosen: Vec<Selection>,
}

pub const RECORD_SCHEMA_VERSION: u32 = 1;

/// Full replayable record of one trial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub schema_version: u32,
    pub config: ExperimentConfig,
    pub trial_seed: u64,
    pub rounds: Vec<RoundEntry>,
    /// Mask coverage per selection round; only the masked-Fisher strategy
    /// fills this.
    pub layer_profiles: Vec<Vec<LayerProfile>>,
    /// SHA-256 of the final parameters.
    pub final_checksum: String,
}

impl RunRecord {
    /// Equality up to wall-clock timings.
    pub fn reproducible_eq(&self, other: &RunRecord) -> bool {
        if self.schema_version != other.schema_version
            || self.config != other.config
            || self.trial_seed != other.trial_seed
            || self.layer_profiles != other.layer_profiles
            || self.final_checksum != other.final_checksum
            || self.rounds.len() != other.rounds.len()
        {
            return false;
        }
        self.rounds.iter().zip(&other.rounds).all(|(a, b)| {
            a.round == b.round
                && a.labeled_count == b.labeled_count
                && a.accuracy == b.accuracy
                && a.chosen == b.chosen
        })
    }
}

/// Seed for trial number `trial` under a base seed.
pub fn trial_seed(base_seed: u64, trial: usize) -> u64 {
    seed::mix3(base_seed, seed::TAG_TRIAL, trial as u64)
}

/// Fraction of `test` classified correctly; argmax ties go to the lowest
/// class index.
pub fn evaluate_accuracy(model: &ModelState, test: &Dataset) -> Result<f64> {
    ensure!(!test.is_empty(), Contract, "cannot evaluate on an empty test set");
    let labels = test
        .labels()
        .ok_or_else(|| crate::error::err!(Contract, "test set must be labeled"))?;
    let mut correct = 0usize;
    for row in 0..test.len() {
        let p = model.predict_proba(test.feature_row(row))?;
        if argmax_class(&p) == labels[row] {
            correct += 1;
        }
    }
    Ok(correct as f64 / test.len() as f64)
}

/// Everything up to and including the first training: the (possibly
/// subsetted) pool, the initial labeled/unlabeled split, and the round-0
/// model. Shared by the full loop and by mask profiling.
#[derive(Debug, Clone)]
pub struct RoundZero {
    pub pool: Dataset,
    pub labeled_rows: Vec<usize>,
    pub unlabeled_rows: Vec<usize>,
    pub model: ModelState,
}

fn effective_train_cfg(cfg: &ExperimentConfig, trial_seed_value: u64, round: usize) -> TrainConfig {
    TrainConfig {
        seed: seed::mix3(
            trial_seed_value.wrapping_add(cfg.train.seed),
            seed::TAG_TRAIN,
            round as u64,
        ),
        ..cfg.train.clone()
    }
}

/// Draw the seed labels and train the first model.
pub fn round_zero(
    cfg: &ExperimentConfig,
    data: &ExperimentData,
    trial_seed_value: u64,
) -> Result<RoundZero> {
    cfg.validate()?;
    check_data(cfg, data)?;

    let pool = match &cfg.data.subset {
        Some(counts) => subset_by_class_counts(
            &data.pool,
            counts,
            seed::mix(trial_seed_value, seed::TAG_SUBSET),
        )?,
        None => data.pool.clone(),
    };
    ensure!(
        cfg.budget <= pool.len(),
        Config,
        "budget {} exceeds pool size {}",
        cfg.budget,
        pool.len()
    );

    // seed labels, uniform without replacement, ids ascending
    let mut init_rng = seed::rng_from(seed::mix(trial_seed_value, seed::TAG_INIT_LABELS));
    let mut labeled_rows: Vec<usize> =
        rand::seq::index::sample(&mut init_rng, pool.len(), cfg.n_initial).into_vec();
    labeled_rows.sort_unstable();
    let unlabeled_rows: Vec<usize> = (0..pool.len())
        .filter(|r| labeled_rows.binary_search(r).is_err())
        .collect();

    let labeled_ds = pool.select_rows(&labeled_rows);
    let model = train(
        &init_params(&cfg.model)?,
        &labeled_ds,
        &effective_train_cfg(cfg, trial_seed_value, 0),
    )?;
    Ok(RoundZero {
        pool,
        labeled_rows,
        unlabeled_rows,
        model,
    })
}

/// Run one trial end to end.
pub fn run_experiment(
    cfg: &ExperimentConfig,
    data: &ExperimentData,
    trial_seed_value: u64,
    clock: &dyn Clock,
) -> Result<RunRecord> {
    let t0 = clock.now_secs();
    let rz = round_zero(cfg, data, trial_seed_value)?;
    let pool = rz.pool;
    let mut labeled_rows = rz.labeled_rows;
    let mut unlabeled_rows = rz.unlabeled_rows;
    let mut model = rz.model;
    let id_to_row: BTreeMap<usize, usize> = (0..pool.len()).map(|r| (pool.id(r), r)).collect();
    let train_cfg_for = |round: usize| effective_train_cfg(cfg, trial_seed_value, round);

    let mut rounds = Vec::with_capacity(cfg.rounds() + 1);
    let mut layer_profiles = Vec::new();

    let accuracy = evaluate_accuracy(&model, &data.test)?;
    rounds.push(RoundEntry {
        round: 0,
        labeled_count: labeled_rows.len(),
        accuracy,
        wall_secs: clock.now_secs() - t0,
        chosen: labeled_rows
            .iter()
            .map(|&r| Selection {
                id: pool.id(r),
                score: 0.0,
            })
            .collect(),
    });

    for round in 1..=cfg.rounds() {
        let round_start = clock.now_secs();
        let step = || -> Result<(Vec<Selection>, Option<Vec<LayerProfile>>)> {
            let candidates = pool.select_rows(&unlabeled_rows);
            let labeled_ds = pool.select_rows(&labeled_rows);
            let batch = cfg.batch_per_round;
            match cfg.strategy {
                StrategyId::FisherMask => {
                    let diag = fisher_diagonal(&model, &candidates)?;
                    let mask = build_mask(&diag, cfg.sparsity)?;
                    let profile = layer_profile(&mask, model.layout());
                    let mut st = init_selection_state(
                        &model,
                        &candidates,
                        &labeled_ds,
                        &mask,
                        cfg.lambda,
                    )?;
                    let picks = select_batch_greedy(&mut st, &model, &candidates, batch)?;
                    Ok((picks, Some(profile)))
                }
                StrategyId::Bait => {
                    let mask = ParamMask::from_segments(
                        model.layout(),
                        model.spec().last_layer_segments(),
                    )?;
                    let mut st = init_selection_state(
                        &model,
                        &candidates,
                        &labeled_ds,
                        &mask,
                        cfg.lambda,
                    )?;
                    let picks = select_batch_greedy(&mut st, &model, &candidates, batch)?;
                    Ok((picks, None))
                }
                StrategyId::Entropy => Ok((select_entropy(&model, &candidates, batch)?, None)),
                StrategyId::Margin => Ok((select_margin(&model, &candidates, batch)?, None)),
                StrategyId::KCenter => {
                    Ok((select_kcenter(&model, &candidates, &labeled_ds, batch)?, None))
                }
                StrategyId::Random => Ok((
                    select_random(
                        &candidates,
                        batch,
                        seed::mix3(trial_seed_value, seed::TAG_SELECT, round as u64),
                    )?,
                    None,
                )),
            }
        };
        let (picks, profile) =
            step().map_err(|e| e.with_context(&alloc::format!("selection round {round}")))?;
        if let Some(p) = profile {
            layer_profiles.push(p);
        }

        for sel in &picks {
            let row = *id_to_row
                .get(&sel.id)
                .expect("selected id comes from the pool");
            let pos = unlabeled_rows
                .binary_search(&row)
                .expect("selected row was unlabeled");
            unlabeled_rows.remove(pos);
            labeled_rows.push(row);
        }
        labeled_rows.sort_unstable();

        let labeled_ds = pool.select_rows(&labeled_rows);
        model = train(&model, &labeled_ds, &train_cfg_for(round))
            .map_err(|e| e.with_context(&alloc::format!("selection round {round}")))?;
        let accuracy = evaluate_accuracy(&model, &data.test)?;
        rounds.push(RoundEntry {
            round,
            labeled_count: labeled_rows.len(),
            accuracy,
            wall_secs: clock.now_secs() - round_start,
            chosen: picks,
        });
    }

    Ok(RunRecord {
        schema_version: RECORD_SCHEMA_VERSION,
        config: cfg.clone(),
        trial_seed: trial_seed_value,
        rounds,
        layer_profiles,
        final_checksum: model.theta_checksum(),
    })
}

fn check_data(cfg: &ExperimentConfig, data: &ExperimentData) -> Result<()> {
    ensure!(
        data.pool.labels().is_some(),
        Contract,
        "experiment pool must be labeled"
    );
    ensure!(
        data.pool.n_features() == cfg.model.d,
        Config,
        "pool has {} features but model d = {}",
        data.pool.n_features(),
        cfg.model.d
    );
    ensure!(
        data.pool.n_classes() == cfg.model.n_classes,
        Config,
        "pool has {} classes but model n_classes = {}",
        data.pool.n_classes(),
        cfg.model.n_classes
    );
    ensure!(
        data.test.n_features() == cfg.model.d && data.test.n_classes() == cfg.model.n_classes,
        Config,
        "test split shape does not match the model"
    );
    Ok(())
}

/// One point of a labels-vs-accuracy curve aggregated over trials.
#[derive(Debug, Clone, PartialEq)]
pub struct CurvePoint {
    pub labels: usize,
    pub mean_acc: f64,
    pub std_acc: f64,
}

/// Mean and population standard deviation of accuracy per round across
/// trials. All records must share the same round structure.
pub fn aggregate_trials(records: &[RunRecord]) -> Result<Vec<CurvePoint>> {
    ensure!(!records.is_empty(), Contract, "no trial records to aggregate");
    let first = &records[0];
    for r in &records[1..] {
        ensure!(
            r.rounds.len() == first.rounds.len()
                && r.rounds
                    .iter()
                    .zip(&first.rounds)
                    .all(|(a, b)| a.labeled_count == b.labeled_count),
            Contract,
            "trial records disagree on round structure"
        );
    }
    let n = records.len() as f64;
    Ok((0..first.rounds.len())
        .map(|i| {
            let mean = records.iter().map(|r| r.rounds[i].accuracy).sum::<f64>() / n;
            let var = records
                .iter()
                .map(|r| {
                    let d = r.rounds[i].accuracy - mean;
                    d * d
                })
                .sum::<f64>()
                / n;
            CurvePoint {
                labels: first.rounds[i].labeled_count,
                mean_acc: mean,
                std_acc: float::sqrt(var),
            }
        })
        .collect())
}

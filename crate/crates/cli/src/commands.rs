//! The four subcommands: run, compare, profile, plot.

use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;

use almask_core::fisher::{build_mask, fisher_diagonal, layer_profile};
use almask_core::harness::{aggregate_trials, round_zero, run_experiment, CurvePoint};
use almask_core::{trial_seed, Clock, ExperimentConfig, ExperimentData, RunRecord, StrategyId};

use crate::config::{self, Overrides};
use crate::csv_io;
use crate::data;
use crate::error::{CliError, Result};
use crate::fsio;
use crate::plot;
use crate::records;

/// Wall clock measuring seconds since construction.
pub struct SystemClock(Instant);

impl SystemClock {
    #[allow(clippy::new_without_default)]
    pub fn new() -> Self {
        SystemClock(Instant::now())
    }
}

impl Clock for SystemClock {
    fn now_secs(&self) -> f64 {
        self.0.elapsed().as_secs_f64()
    }
}

fn out_dir_env() -> Option<String> {
    std::env::var(config::OUT_DIR_ENV).ok()
}

/// All trials of one strategy, parallel up to the `--jobs` cap.
fn run_trials(
    cfg: &ExperimentConfig,
    data: &ExperimentData,
    jobs: Option<usize>,
) -> Result<Vec<RunRecord>> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.unwrap_or(0))
        .build()
        .map_err(|e| CliError::Runtime(format!("thread pool: {e}")))?;
    pool.install(|| {
        (0..cfg.trials)
            .into_par_iter()
            .map(|t| {
                let seed = trial_seed(cfg.base_seed, t);
                let clock = SystemClock::new();
                run_experiment(cfg, data, seed, &clock)
                    .map_err(|e| CliError::Core(e.with_context(&format!("trial {t}"))))
            })
            .collect()
    })
}

/// Records, selections, and the aggregated curve for one strategy.
fn write_strategy_outputs(
    out_dir: &Path,
    strategy: StrategyId,
    recs: &[RunRecord],
) -> Result<Vec<CurvePoint>> {
    for (t, rec) in recs.iter().enumerate() {
        records::save_run_record(&out_dir.join(format!("{strategy}_trial{t}.json")), rec)?;
    }
    csv_io::write_selections_csv(&out_dir.join(format!("{strategy}_selections.csv")), recs)?;
    let curve = aggregate_trials(recs).map_err(CliError::Core)?;
    csv_io::write_curve_csv(&out_dir.join(format!("curve_{strategy}.csv")), &curve)?;
    Ok(curve)
}

pub fn cmd_run(config_path: &Path, ov: &Overrides) -> Result<()> {
    let mut file = config::load_config(config_path)?;
    file.apply_overrides(ov);
    let strategy = file.run_strategy()?;
    let out_dir = config::resolve_output_dir(&file, ov, config_path, out_dir_env().as_deref());
    let cfg = file.to_experiment_config(strategy);
    cfg.validate().map_err(CliError::Core)?;
    let data = data::resolve_data(&cfg.data)?;
    let recs = run_trials(&cfg, &data, ov.jobs)?;
    let curve = write_strategy_outputs(&out_dir, strategy, &recs)?;
    let last = curve.last().expect("round 0 always present");
    println!(
        "{strategy}: {} trial(s), final mean accuracy {:.4} (std {:.4}), outputs in {}",
        recs.len(),
        last.mean_acc,
        last.std_acc,
        out_dir.display()
    );
    Ok(())
}

pub fn cmd_compare(config_path: &Path, ov: &Overrides) -> Result<()> {
    let mut file = config::load_config(config_path)?;
    file.apply_overrides(ov);
    let strategies = file.compare_strategies()?;
    let out_dir = config::resolve_output_dir(&file, ov, config_path, out_dir_env().as_deref());
    // one shared load; every strategy sees identical data and trial seeds
    let first_cfg = file.to_experiment_config(strategies[0]);
    first_cfg.validate().map_err(CliError::Core)?;
    let data = data::resolve_data(&first_cfg.data)?;

    let mut curves: Vec<(String, Vec<CurvePoint>)> = Vec::new();
    for &strategy in &strategies {
        let cfg = file.to_experiment_config(strategy);
        let label = strategy.to_string();
        let recs = run_trials(&cfg, &data, ov.jobs)
            .map_err(|e| e.with_note(&format!("strategy {label}")))?;
        let curve = write_strategy_outputs(&out_dir, strategy, &recs)
            .map_err(|e| e.with_note(&format!("strategy {label}")))?;
        let last = curve.last().expect("round 0 always present");
        println!("{label}: final mean accuracy {:.4} (std {:.4})", last.mean_acc, last.std_acc);
        curves.push((label, curve));
    }
    csv_io::write_comparison_csv(&out_dir.join("comparison.csv"), &curves)?;
    println!(
        "compared {} strategies over {} trial(s), outputs in {}",
        strategies.len(),
        file.trials,
        out_dir.display()
    );
    Ok(())
}

pub fn cmd_profile(config_path: &Path, ov: &Overrides) -> Result<()> {
    let mut file = config::load_config(config_path)?;
    file.apply_overrides(ov);
    let out_dir = config::resolve_output_dir(&file, ov, config_path, out_dir_env().as_deref());
    // which layers the mask lands in is a property of the trained model and
    // the sparsity, not of the configured strategy
    let cfg = file.to_experiment_config(StrategyId::FisherMask);
    cfg.validate().map_err(CliError::Core)?;
    let data = data::resolve_data(&cfg.data)?;
    let rz = round_zero(&cfg, &data, trial_seed(cfg.base_seed, 0)).map_err(CliError::Core)?;
    let candidates = rz.pool.select_rows(&rz.unlabeled_rows);
    let diag = fisher_diagonal(&rz.model, &candidates).map_err(CliError::Core)?;
    let mask = build_mask(&diag, cfg.sparsity).map_err(CliError::Core)?;
    let profile = layer_profile(&mask, rz.model.layout());
    csv_io::write_profile_csv(&out_dir.join("profile.csv"), &profile)?;

    for p in &profile {
        println!("{}: {} of {} params in mask ({:.4})", p.layer, p.selected, p.total, p.fraction);
    }
    let last_names = cfg.model.last_layer_segments();
    let last_selected: usize = profile
        .iter()
        .filter(|p| last_names.iter().any(|n| *n == p.layer))
        .map(|p| p.selected)
        .sum();
    let k = mask.len();
    println!(
        "last layer share of mask: {last_selected} of {k} ({:.4}), profile in {}",
        last_selected as f64 / k as f64,
        out_dir.join("profile.csv").display()
    );
    Ok(())
}

pub fn cmd_plot(curves: &[PathBuf], out: &Path) -> Result<()> {
    let mut series = Vec::new();
    for path in curves {
        let stem = path
            .file_stem()
            .and_then(|s| s.to_str())
            .unwrap_or("curve")
            .to_owned();
        series.push((stem, csv_io::read_curve_csv(path)?));
    }
    let svg = plot::render_svg(&series)?;
    fsio::write_atomic(out, svg.as_bytes())?;
    println!("wrote {}", out.display());
    Ok(())
}

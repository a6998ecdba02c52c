//! Batch-mode active learning built around parameter-masked information
//! scores: datasets, small analytic models, mask construction, greedy
//! batch selection, and a deterministic experiment loop.
//!
//! The crate is `no_std` by default (with `alloc`); the `std` feature turns
//! on float intrinsics and `std::error::Error` impls. All IO lives in the
//! companion CLI crate.

#![cfg_attr(not(feature = "std"), no_std)]
#![deny(unsafe_code)]

extern crate alloc;

mod float;
mod seed;

pub mod dataset;
pub mod error;
pub mod fisher;
pub mod linalg;
pub mod harness;
pub mod model;
pub mod selector;

pub use dataset::{subset_by_class_counts, synth_gaussian_imbalanced, ClassCountSpec, Dataset};
pub use error::{Error, ErrorKind, Result};
pub use fisher::{FisherDiagonal, LayerProfile, ParamMask};
pub use harness::{
    run_experiment, trial_seed, Clock, ExperimentConfig, ExperimentData, NullClock, RoundZero,
    RunRecord,
};
pub use linalg::Matrix;
pub use model::{ModelKind, ModelSpec, ModelState, ParamLayout, TrainConfig};
pub use selector::{Selection, StrategyId};

//! File formats, configuration, orchestration, and plotting around the core
//! library. The `almask` binary is a thin wrapper over `commands`.

pub mod checkpoint;
pub mod commands;
pub mod config;
pub mod csv_io;
pub mod data;
pub mod error;
pub mod fsio;
pub mod idx;
pub mod plot;
pub mod records;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use almask_cli::commands;
use almask_cli::config::Overrides;

#[derive(Parser)]
#[command(
    name = "almask",
    version,
    about = "Seeded batch active learning experiments with Fisher-masked selection"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run one strategy for the configured number of trials
    Run {
        /// Experiment config (JSON)
        config: PathBuf,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Run several strategies with matched trial seeds and combine curves
    Compare {
        /// Experiment config (JSON) with a `strategies` list
        config: PathBuf,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Train the initial model and report which layers the mask covers
    Profile {
        /// Experiment config (JSON)
        config: PathBuf,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Render learning-curve CSVs as one SVG chart
    Plot {
        /// Curve CSV files, one series each; legend uses the file stems
        #[arg(required = true)]
        curves: Vec<PathBuf>,
        /// Output SVG path
        #[arg(long, short)]
        out: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.cmd {
        Cmd::Run { config, overrides } => commands::cmd_run(config, overrides),
        Cmd::Compare { config, overrides } => commands::cmd_compare(config, overrides),
        Cmd::Profile { config, overrides } => commands::cmd_profile(config, overrides),
        Cmd::Plot { curves, out } => commands::cmd_plot(curves, out),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

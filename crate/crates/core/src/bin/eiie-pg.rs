use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use eiie_pg::experiment::{self, emit_report, regenerate_report, render_table, ExperimentConfig};

#[derive(Parser)]
#[command(version, about = "Train and backtest EIIE portfolio policies across normalization methods")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a seeded campaign and write its report.
    Run {
        config: PathBuf,
        #[arg(long, default_value = "campaign")]
        out: PathBuf,
        /// Concurrent runs (0 = one per core).
        #[arg(long)]
        workers: Option<usize>,
        #[arg(long)]
        runs: Option<usize>,
        /// Training updates per run.
        #[arg(long)]
        steps: Option<u64>,
    },
    /// Recompute the aggregates of a campaign directory.
    Report { dir: PathBuf },
    /// Check a config and its data without training.
    Validate { config: PathBuf },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse().command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn run(command: Command) -> Result<(), experiment::ExperimentError> {
    match command {
        Command::Run { config, out, workers, runs, steps } => {
            let mut cfg = ExperimentConfig::load(&config)?;
            if let Some(w) = workers {
                cfg.workers = w;
            }
            if let Some(r) = runs {
                cfg.runs = r;
            }
            if let Some(s) = steps {
                cfg.trainer.steps = s;
            }
            let campaign = experiment::run_campaign(&cfg)?;
            emit_report(&campaign, &out)?;
            print!("{}", render_table(&campaign.report));
            println!("report written to {}", out.display());
        }
        Command::Report { dir } => {
            let report = regenerate_report(&dir)?;
            print!("{}", render_table(&report));
        }
        Command::Validate { config } => {
            let cfg = ExperimentConfig::load(&config)?;
            let v = experiment::validate(&cfg)?;
            println!("ok: {} assets ({})", v.tickers.len(), v.tickers.join(", "));
            println!("rows: {} aligned, {} train, {} test", v.frame_rows, v.train_rows, v.test_rows);
            println!("decisions: {} train, {} test", v.train_decisions, v.test_decisions);
        }
    }
    Ok(())
}

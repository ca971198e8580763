use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use stabfield_cli::acceptance::{self, Effort};
use stabfield_cli::describe::describe;
use stabfield_cli::{run, ExperimentConfig, RunOptions};

#[derive(Parser)]
#[command(name = "stabfield", version, about = "Random-time fractional stable fields")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a configuration file.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Output directory (overrides `output` in the configuration).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Replace the master seed of the configuration.
        #[arg(long)]
        seed_override: Option<u64>,
        /// Worker threads; results do not depend on it.
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Print the formula, parameter domains and reference of a kernel kind.
    Describe {
        kind: String,
        /// Space dimension for chentsov and moving-average.
        #[arg(long, default_value_t = 1)]
        d: usize,
    },
    /// Run the acceptance suite at reduced replication counts.
    Selftest {
        /// Use the full replication counts instead.
        #[arg(long)]
        full: bool,
        /// Keep the run artifacts here instead of a temporary directory.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        threads: Option<usize>,
        /// Run only these criteria (comma-separated ids).
        #[arg(long, value_delimiter = ',')]
        only: Vec<u32>,
    },
}

fn selftest(full: bool, out: Option<PathBuf>, threads: Option<usize>, only: &[u32]) -> Result<bool> {
    if let Some(n) = threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("configuring worker threads")?;
    }
    let tmp = tempfile::tempdir()?;
    let work = out.unwrap_or_else(|| tmp.path().to_path_buf());
    let effort = if full { Effort::Full } else { Effort::Reduced };
    let outcomes = acceptance::run_selected(effort, &work, only, |o| println!("{}", o.line()));
    let passed = outcomes.iter().filter(|o| o.pass).count();
    println!("{passed}/{} criteria passed ({effort:?} effort)", outcomes.len());
    Ok(passed == outcomes.len())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run {
            config,
            out,
            seed_override,
            threads,
        } => ExperimentConfig::load(&config)
            .map_err(anyhow::Error::from)
            .and_then(|cfg| {
                run(
                    &cfg,
                    &RunOptions {
                        out,
                        seed_override,
                        threads,
                    },
                )
            })
            .map(|outcome| {
                println!("{}", outcome.report.summary());
                println!(
                    "wrote {} files to {} in {:.1} s",
                    outcome.manifest.files.len() + 1,
                    outcome.out_dir.display(),
                    outcome.elapsed_seconds
                );
                true
            }),
        Command::Describe { kind, d } => describe(&kind, d).map(|text| {
            println!("{text}");
            true
        }),
        Command::Selftest {
            full,
            out,
            threads,
            only,
        } => selftest(full, out, threads, &only),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

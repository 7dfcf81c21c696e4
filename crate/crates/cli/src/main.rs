//! `funnel`: runs scenario files through the funnel-core pipelines.
//!
//! ```text
//! funnel run identities.scn mourre.scn --out-dir reports --parallel
//! funnel list
//! funnel describe lap
//! ```
//!
//! Exit status is 0 when every assertion passes, 1 on a failed assertion,
//! 2 on an unreadable or invalid scenario and 3 outside the supported
//! envelope. With several scenarios the largest status wins.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use funnel_core::scenario::{self, describe, exit_code, Report, Scenario, EXPERIMENTS};
use funnel_core::Error;

/// Bundled scenarios, runnable by name.
const BUNDLED: &[(&str, &str)] = &[
    ("identities.scn", include_str!("../scenarios/identities.scn")),
    ("spectra.scn", include_str!("../scenarios/spectra.scn")),
    ("mourre.scn", include_str!("../scenarios/mourre.scn")),
    ("lap.scn", include_str!("../scenarios/lap.scn")),
    ("propagate.scn", include_str!("../scenarios/propagate.scn")),
    ("hypotheses.scn", include_str!("../scenarios/hypotheses.scn")),
];

#[derive(Parser)]
#[command(name = "funnel", version, about = "Verification and probe runner for discrete funnel Laplacians")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one or more scenario files (or bundled scenario names).
    Run {
        #[arg(required = true)]
        files: Vec<PathBuf>,
        /// Directory receiving one subdirectory of reports per scenario.
        #[arg(long, default_value = "reports")]
        out_dir: PathBuf,
        /// Override the seed of every scenario.
        #[arg(long)]
        seed: Option<u64>,
        /// Run the scenarios concurrently.
        #[arg(long)]
        parallel: bool,
    },
    /// List experiments and bundled scenarios.
    List,
    /// Show the parameters of an experiment.
    Describe { name: String },
}

fn load(path: &Path) -> Result<Scenario, Error> {
    if !path.exists() {
        let name = path.to_string_lossy();
        if let Some((file, text)) = BUNDLED.iter().find(|(f, _)| *f == name || f.trim_end_matches(".scn") == name) {
            let mut s = Scenario::parse(text)?;
            s.name.get_or_insert_with(|| file.trim_end_matches(".scn").to_string());
            return Ok(s);
        }
    }
    Scenario::load(path)
}

fn run_one(path: &Path, out_dir: &Path, seed: Option<u64>) -> Result<Report, Error> {
    let s = load(path)?;
    let report = scenario::run(&s, seed)?;
    report.write_to(&out_dir.join(&report.scenario))?;
    Ok(report)
}

/// Prints the outcome of one scenario and returns its exit status.
fn finish(path: &Path, outcome: Result<Report, Error>) -> u8 {
    match outcome {
        Ok(r) if r.passed() => {
            println!("PASS {} ({})", r.scenario, r.experiment);
            0
        }
        Ok(r) => {
            println!("FAIL {} ({})", r.scenario, r.experiment);
            for f in &r.failures {
                eprintln!("  {}: {}", f.assertion, f.detail);
            }
            1
        }
        Err(e) => {
            eprintln!("error: {}: {e}", path.display());
            exit_code(&e) as u8
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Run { files, out_dir, seed, parallel } => {
            let outcomes: Vec<Result<Report, Error>> = if parallel {
                std::thread::scope(|scope| {
                    let handles: Vec<_> = files.iter().map(|f| scope.spawn(|| run_one(f, &out_dir, seed))).collect();
                    handles.into_iter().map(|h| h.join().expect("scenario thread panicked")).collect()
                })
            } else {
                files.iter().map(|f| run_one(f, &out_dir, seed)).collect()
            };
            let status = files.iter().zip(outcomes).map(|(f, o)| finish(f, o)).max().unwrap_or(0);
            ExitCode::from(status)
        }
        Command::List => {
            println!("experiments:");
            for e in EXPERIMENTS {
                println!("  {:<18} {}", e.name, e.summary);
            }
            println!("bundled scenarios:");
            for (name, _) in BUNDLED {
                println!("  {name}");
            }
            ExitCode::SUCCESS
        }
        Command::Describe { name } => match describe(&name) {
            Ok(text) => {
                print!("{text}");
                ExitCode::SUCCESS
            }
            Err(e) => {
                eprintln!("error: {e}");
                ExitCode::from(2)
            }
        },
    }
}

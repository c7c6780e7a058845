use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use ricci_lab::config::load_config;
use ricci_lab::run_experiment;

#[derive(Parser)]
#[command(
    name = "ricci-lab",
    version,
    about = "Run the ricci-core verification suites"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a JSON config.
    Run {
        config: PathBuf,
        /// Output directory; overrides `output_dir` from the config.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Seed; overrides `seed` from the config.
        #[arg(long)]
        seed: Option<u64>,
        /// Treat soft checks as hard ones.
        #[arg(long)]
        strict: bool,
    },
}

fn main() -> ExitCode {
    let Command::Run {
        config,
        out,
        seed,
        strict,
    } = Cli::parse().command;
    let mut cfg = match load_config(&config) {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("{e}");
            return ExitCode::from(2);
        }
    };
    if let Some(seed) = seed {
        cfg.seed = seed;
    }
    let dir = out.unwrap_or_else(|| cfg.output_dir.clone());
    let outcome = match run_experiment(&cfg, strict, &dir) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    };
    for n in &outcome.report.notices {
        eprintln!("note: {n}");
    }
    for (suite, took) in &outcome.timings {
        eprintln!("{:<10} {:>8.2}s", suite.name(), took.as_secs_f64());
    }
    let failures = outcome.report.failures(strict);
    if failures.is_empty() {
        let warned = outcome
            .report
            .checks
            .iter()
            .filter(|c| c.status() == "warn")
            .count();
        println!(
            "{} checks, {warned} soft warnings; results in {}",
            outcome.report.checks.len(),
            dir.display()
        );
        return ExitCode::SUCCESS;
    }
    for f in &failures {
        eprintln!(
            "FAILED {}/{}: {} = {:e} outside [{:e}, {:e}]",
            f.suite, f.case, f.quantity, f.value, f.lower, f.upper
        );
    }
    ExitCode::from(1)
}

//! Batch runner for the `ricci-core` verification suites: reads a JSON experiment config,
//! runs the selected suites and writes `results.csv`, `manifest.json` and SVG plots.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use thiserror::Error;

pub mod config;
pub mod plot;
pub mod report;
pub mod suites;

use config::{ExperimentConfig, Suite};
use report::Report;
use suites::{run_suite, Context};

#[derive(Debug, Error)]
pub enum RunError {
    #[error("suite {suite} aborted: {source}")]
    Suite {
        suite: &'static str,
        source: ricci_core::Error,
    },
    #[error("{0}")]
    Report(String),
    #[error("cannot write {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

/// A finished run.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub report: Report,
    /// Wall time per suite in run order.
    pub timings: Vec<(Suite, Duration)>,
}

/// Runs the configured suites without touching the file system.
pub fn run_suites(cfg: &ExperimentConfig, strict: bool) -> Result<Outcome, RunError> {
    let ctx = Context {
        cfg: cfg.clone(),
        strict,
    };
    let mut report = Report::default();
    let mut timings = Vec::new();
    for suite in cfg.suite.expand() {
        let start = Instant::now();
        let out = run_suite(suite, &ctx).map_err(|source| RunError::Suite {
            suite: suite.name(),
            source,
        })?;
        timings.push((suite, start.elapsed()));
        report.merge(suite.name(), out).map_err(RunError::Report)?;
    }
    Ok(Outcome { report, timings })
}

fn write(path: &Path, contents: &str) -> Result<(), RunError> {
    fs::write(path, contents).map_err(|source| RunError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Manifest document: the configuration and every registered constant.
pub fn manifest(cfg: &ExperimentConfig, report: &Report) -> serde_json::Value {
    serde_json::json!({
        "config": cfg,
        "constants": report.constants,
        "notices": report.notices,
    })
}

/// Writes `results.csv`, `manifest.json` and `plots/*.svg` below `dir`.
pub fn write_outputs(
    cfg: &ExperimentConfig,
    report: &mut Report,
    dir: &Path,
) -> Result<(), RunError> {
    let plots = dir.join("plots");
    fs::create_dir_all(&plots).map_err(|source| RunError::Io {
        path: plots.clone(),
        source,
    })?;
    for (suite, series) in &report.series {
        match plot::render_svg(series) {
            Ok(Some(svg)) => write(&plots.join(format!("{suite}_{}.svg", series.name)), &svg)?,
            Ok(None) => report
                .notices
                .push(format!("plot {} skipped: empty series", series.name)),
            Err(e) => report
                .notices
                .push(format!("plot {} not rendered: {e}", series.name)),
        }
    }
    write(&dir.join("results.csv"), &report.csv())?;
    let text = serde_json::to_string_pretty(&manifest(cfg, report))
        .map_err(|e| RunError::Report(e.to_string()))?;
    write(&dir.join("manifest.json"), &text)
}

/// Runs the suites and writes all outputs below `dir`.
pub fn run_experiment(
    cfg: &ExperimentConfig,
    strict: bool,
    dir: &Path,
) -> Result<Outcome, RunError> {
    let mut outcome = run_suites(cfg, strict)?;
    write_outputs(cfg, &mut outcome.report, dir)?;
    Ok(outcome)
}

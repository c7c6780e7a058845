use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

/// Which verification suite to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    Cones,
    Flows,
    Kernel,
    Cutoff,
    Distortion,
    Expansion,
    All,
}

impl Suite {
    pub const EACH: [Suite; 6] = [
        Suite::Cones,
        Suite::Flows,
        Suite::Kernel,
        Suite::Cutoff,
        Suite::Distortion,
        Suite::Expansion,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Cones => "cones",
            Suite::Flows => "flows",
            Suite::Kernel => "kernel",
            Suite::Cutoff => "cutoff",
            Suite::Distortion => "distortion",
            Suite::Expansion => "expansion",
            Suite::All => "all",
        }
    }

    /// The suites this selection expands to, in run order.
    pub fn expand(self) -> Vec<Suite> {
        match self {
            Suite::All => Self::EACH.to_vec(),
            s => vec![s],
        }
    }
}

/// Base grid and kernel step. Suites refine from here (`2m`, `dt/4`) where they need a
/// convergence comparison.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Resolution {
    pub m: usize,
    pub dt: f64,
}

impl Default for Resolution {
    fn default() -> Self {
        Self { m: 64, dt: 1e-4 }
    }
}

/// Feasible grid sizes: the expansion driver needs `2m ≥ 128` to fit five stages and the
/// Gaussian benchmark runs up to `2m`.
pub const M_RANGE: (usize, usize) = (64, 128);
/// Feasible kernel steps: the evolving-torus positivity condition `dt·max scal < 1` and the
/// 20-step mass window.
pub const DT_RANGE: (f64, f64) = (1e-6, 2e-4);

/// Optional parameter ranges.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sweep {
    /// Random operators in the cone suite.
    pub samples: Option<usize>,
    /// Collar widths `r` of the cutoff suite.
    pub widths: Option<Vec<f64>>,
    /// Bump sizes `α₀` of the expansion suite.
    pub alpha0: Option<Vec<f64>>,
    /// Amplitude of the conformal torus benchmark.
    pub amplitude: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub suite: Suite,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default)]
    pub resolution: Resolution,
    #[serde(default)]
    pub sweep: Option<Sweep>,
    #[serde(default = "default_output")]
    pub output_dir: PathBuf,
}

fn default_seed() -> u64 {
    7
}

fn default_output() -> PathBuf {
    PathBuf::from("out")
}

impl ExperimentConfig {
    pub fn new(suite: Suite) -> Self {
        Self {
            suite,
            seed: default_seed(),
            resolution: Resolution::default(),
            sweep: None,
            output_dir: default_output(),
        }
    }

    pub fn sweep(&self) -> Sweep {
        self.sweep.clone().unwrap_or_default()
    }

    pub fn samples(&self) -> usize {
        self.sweep().samples.unwrap_or(1000)
    }

    pub fn widths(&self) -> Vec<f64> {
        self.sweep().widths.unwrap_or_else(|| vec![0.05, 0.1, 0.2])
    }

    pub fn alpha0(&self) -> Vec<f64> {
        self.sweep().alpha0.unwrap_or_else(|| vec![0.05])
    }

    pub fn amplitude(&self) -> f64 {
        self.sweep().amplitude.unwrap_or(0.3)
    }

    /// Semantic checks beyond the schema, as `(field, message)`.
    pub fn validate(&self) -> Result<(), (&'static str, String)> {
        let Resolution { m, dt } = self.resolution;
        if !(dt > 0.0) {
            return Err(("dt", format!("resolution.dt must be positive, got {dt}")));
        }
        if !(DT_RANGE.0..=DT_RANGE.1).contains(&dt) {
            return Err((
                "dt",
                format!(
                    "resolution.dt = {dt} is outside the feasible range [{:e}, {:e}]",
                    DT_RANGE.0, DT_RANGE.1
                ),
            ));
        }
        if !(M_RANGE.0..=M_RANGE.1).contains(&m) || m % 16 != 0 {
            return Err((
                "m",
                format!(
                    "resolution.m = {m} must be a multiple of 16 in [{}, {}]",
                    M_RANGE.0, M_RANGE.1
                ),
            ));
        }
        let sweep = self.sweep();
        if sweep.samples == Some(0) {
            return Err(("samples", "sweep.samples must be at least 1".into()));
        }
        if let Some(w) = &sweep.widths {
            if w.len() < 2 || w.iter().any(|r| !(*r > 0.0 && *r < 0.25)) {
                return Err((
                    "widths",
                    "sweep.widths needs at least two values in (0, 0.25)".into(),
                ));
            }
        }
        if let Some(a) = &sweep.alpha0 {
            if a.is_empty() || a.iter().any(|v| !(*v >= 0.0 && *v <= 0.2)) {
                return Err(("alpha0", "sweep.alpha0 needs values in [0, 0.2]".into()));
            }
        }
        if let Some(a) = sweep.amplitude {
            if !(a > 0.0 && a <= 0.5) {
                return Err((
                    "amplitude",
                    format!("sweep.amplitude = {a} must lie in (0, 0.5]"),
                ));
            }
        }
        Ok(())
    }
}

/// A configuration error anchored to a line of the source file.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub path: PathBuf,
    pub line: usize,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}: {}", self.path.display(), self.line, self.message)
    }
}

impl std::error::Error for ConfigError {}

/// First line mentioning the JSON key `key`, or 1.
fn line_of(text: &str, key: &str) -> usize {
    let needle = format!("\"{key}\"");
    text.lines()
        .position(|l| l.contains(&needle))
        .map_or(1, |i| i + 1)
}

/// Parses and validates a configuration.
pub fn parse_config(text: &str, path: &Path) -> Result<ExperimentConfig, ConfigError> {
    let cfg: ExperimentConfig = serde_json::from_str(text).map_err(|e| ConfigError {
        path: path.to_path_buf(),
        line: e.line().max(1),
        message: e.to_string(),
    })?;
    cfg.validate().map_err(|(key, message)| ConfigError {
        path: path.to_path_buf(),
        line: line_of(text, key),
        message,
    })?;
    Ok(cfg)
}

pub fn load_config(path: &Path) -> Result<ExperimentConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|e| ConfigError {
        path: path.to_path_buf(),
        line: 1,
        message: format!("cannot read config: {e}"),
    })?;
    parse_config(&text, path)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_gets_defaults() {
        let cfg = parse_config(r#"{"suite": "cones"}"#, Path::new("c.json")).unwrap();
        assert_eq!(cfg.seed, 7);
        assert_eq!(cfg.resolution, Resolution::default());
        assert_eq!(cfg.samples(), 1000);
    }

    #[test]
    fn negative_dt_is_anchored() {
        let text = "{\n  \"suite\": \"kernel\",\n  \"resolution\": {\n    \"m\": 64,\n    \"dt\": -0.001\n  }\n}";
        let err = parse_config(text, Path::new("k.json")).unwrap_err();
        assert_eq!(err.line, 5);
        assert!(err.to_string().starts_with("k.json:5: "));
    }

    #[test]
    fn unknown_field_is_a_schema_error() {
        let err =
            parse_config("{\"suite\": \"all\",\n \"sed\": 3}", Path::new("a.json")).unwrap_err();
        assert_eq!(err.line, 2);
    }

    #[test]
    fn all_expands_in_order() {
        assert_eq!(Suite::All.expand().len(), 6);
        assert_eq!(Suite::Kernel.expand(), vec![Suite::Kernel]);
    }
}

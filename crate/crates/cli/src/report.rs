use std::collections::BTreeMap;

use ricci_core::io::{csv_record, format_sig17};
use serde::Serialize;

/// How a check outcome affects the exit status.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    /// Failure makes the run exit 1.
    Hard,
    /// Failure is reported but only fails the run under `--strict`.
    Soft,
    /// A measurement without a bound.
    Info,
}

/// One measured quantity with its admissible interval `[lower, upper]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub suite: &'static str,
    pub case: String,
    pub quantity: String,
    pub value: f64,
    pub lower: f64,
    pub upper: f64,
    pub severity: Severity,
}

impl Check {
    pub fn passed(&self) -> bool {
        self.severity == Severity::Info || (self.value >= self.lower && self.value <= self.upper)
    }

    pub fn status(&self) -> &'static str {
        match (self.severity, self.passed()) {
            (Severity::Info, _) => "info",
            (_, true) => "pass",
            (Severity::Hard, false) => "fail",
            (Severity::Soft, false) => "warn",
        }
    }

    fn record(&self) -> String {
        csv_record(&[
            self.suite.to_string(),
            self.case.clone(),
            self.quantity.clone(),
            format_sig17(self.value),
            format_sig17(self.lower),
            format_sig17(self.upper),
            self.status().to_string(),
        ])
    }
}

/// A fitted or measured constant for the manifest.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Constant {
    pub module: &'static str,
    pub value: f64,
    /// Admissible deviation or bound the constant is checked against, if any.
    pub tolerance: Option<f64>,
    pub description: String,
}

/// A reference curve drawn on top of a series.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Overlay {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Series {
    pub name: String,
    pub x_label: String,
    pub y_label: String,
    pub points: Vec<(f64, f64)>,
    pub overlays: Vec<Overlay>,
}

impl Series {
    pub fn new(name: &str, x_label: &str, y_label: &str, points: Vec<(f64, f64)>) -> Self {
        Self {
            name: name.into(),
            x_label: x_label.into(),
            y_label: y_label.into(),
            points,
            overlays: Vec::new(),
        }
    }

    pub fn with_overlay(mut self, label: &str, points: Vec<(f64, f64)>) -> Self {
        self.overlays.push(Overlay {
            label: label.into(),
            points,
        });
        self
    }
}

/// Everything one suite produced.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SuiteOutput {
    pub checks: Vec<Check>,
    pub constants: Vec<(String, Constant)>,
    pub series: Vec<Series>,
    pub notices: Vec<String>,
}

impl SuiteOutput {
    fn push(
        &mut self,
        suite: &'static str,
        case: &str,
        quantity: &str,
        value: f64,
        bounds: (f64, f64),
        severity: Severity,
    ) {
        self.checks.push(Check {
            suite,
            case: case.into(),
            quantity: quantity.into(),
            value,
            lower: bounds.0,
            upper: bounds.1,
            severity,
        });
    }

    pub fn hard(
        &mut self,
        suite: &'static str,
        case: &str,
        quantity: &str,
        value: f64,
        bounds: (f64, f64),
    ) {
        self.push(suite, case, quantity, value, bounds, Severity::Hard);
    }

    pub fn soft(
        &mut self,
        suite: &'static str,
        case: &str,
        quantity: &str,
        value: f64,
        bounds: (f64, f64),
    ) {
        self.push(suite, case, quantity, value, bounds, Severity::Soft);
    }

    pub fn info(&mut self, suite: &'static str, case: &str, quantity: &str, value: f64) {
        self.push(
            suite,
            case,
            quantity,
            value,
            (f64::NEG_INFINITY, f64::INFINITY),
            Severity::Info,
        );
    }

    /// Boolean check recorded as 1 (true) against the interval `[1, 1]`.
    pub fn hard_flag(&mut self, suite: &'static str, case: &str, quantity: &str, ok: bool) {
        self.hard(
            suite,
            case,
            quantity,
            if ok { 1.0 } else { 0.0 },
            (1.0, 1.0),
        );
    }

    pub fn constant(
        &mut self,
        name: &str,
        module: &'static str,
        value: f64,
        tolerance: Option<f64>,
        description: &str,
    ) {
        self.constants.push((
            name.into(),
            Constant {
                module,
                value,
                tolerance,
                description: description.into(),
            },
        ));
    }

    pub fn find(&self, case: &str, quantity: &str) -> Option<&Check> {
        self.checks
            .iter()
            .find(|c| c.case == case && c.quantity == quantity)
    }
}

/// Merged output of a run.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Report {
    pub checks: Vec<Check>,
    pub constants: BTreeMap<String, Constant>,
    pub series: Vec<(&'static str, Series)>,
    pub notices: Vec<String>,
}

pub const CSV_HEADER: &str = "\
# ricci-lab results\r
# suite: verification suite that produced the row\r
# case: fixture or sample the row belongs to\r
# quantity: measured quantity\r
# value: measured value (17 significant digits)\r
# lower, upper: admissible interval; -inf/inf when unbounded\r
# status: pass, fail (hard check), warn (soft check, fails only with --strict) or info\r
";

impl Report {
    /// Appends a suite's output. Constant names must be unique across the run.
    pub fn merge(&mut self, suite: &'static str, out: SuiteOutput) -> Result<(), String> {
        self.checks.extend(out.checks);
        for (name, c) in out.constants {
            if self.constants.insert(name.clone(), c).is_some() {
                return Err(format!("constant {name} registered twice"));
            }
        }
        self.series
            .extend(out.series.into_iter().map(|s| (suite, s)));
        self.notices.extend(out.notices);
        Ok(())
    }

    pub fn csv(&self) -> String {
        let mut out = String::from(CSV_HEADER);
        out.push_str(&csv_record(&[
            "suite", "case", "quantity", "value", "lower", "upper", "status",
        ]));
        for c in &self.checks {
            out.push_str(&c.record());
        }
        out
    }

    /// Checks that fail the run; soft checks count only when `strict`.
    pub fn failures(&self, strict: bool) -> Vec<&Check> {
        self.checks
            .iter()
            .filter(|c| {
                !c.passed()
                    && (c.severity == Severity::Hard || (strict && c.severity == Severity::Soft))
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn statuses() {
        let mut out = SuiteOutput::default();
        out.hard("cones", "a", "gap", 2.0, (0.0, 1.0));
        out.soft("cones", "a", "slope", 2.0, (0.0, 1.0));
        out.info("cones", "a", "count", 5.0);
        let s: Vec<_> = out.checks.iter().map(|c| c.status()).collect();
        assert_eq!(s, ["fail", "warn", "info"]);
        let mut r = Report::default();
        r.merge("cones", out).unwrap();
        assert_eq!(r.failures(false).len(), 1);
        assert_eq!(r.failures(true).len(), 2);
    }

    #[test]
    fn duplicate_constant_rejected() {
        let mut a = SuiteOutput::default();
        a.constant("beta", "distortion", 1.0, None, "");
        let mut r = Report::default();
        r.merge("distortion", a.clone()).unwrap();
        assert!(r.merge("distortion", a).is_err());
    }

    #[test]
    fn csv_rows_end_in_crlf() {
        let mut out = SuiteOutput::default();
        out.hard("kernel", "flat, m=64", "mass", 0.1, (0.0, 1.0));
        let mut r = Report::default();
        r.merge("kernel", out).unwrap();
        let csv = r.csv();
        assert!(csv.ends_with("\r\n"));
        assert_eq!(csv.matches('\n').count(), csv.matches("\r\n").count());
        assert!(csv.contains("\"flat, m=64\""));
        assert!(csv.contains("1.0000000000000001e-1"));
    }
}

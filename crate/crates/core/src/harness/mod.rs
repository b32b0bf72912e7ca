//! Convergence sweeps, bound checks and report emission.
//!
//! Every sweep samples `K_n f` once per `(kernel, f, n)` and reuses the
//! samples across φ-functions and λ values. Cells run in parallel and are
//! collected in key order, so reports are byte-identical across runs.

mod config;
mod report;
mod sweeps;

pub use config::{lambda_scan, parse_list, ExperimentConfig, Format, LambdaPolicy, Tolerances, DEFAULT_N_LIST, MIN_GRID};
pub use report::{emit_report, format_float, render_csv, render_json, render_svg};
pub use sweeps::{
    run_full_suite, run_modular_convergence, run_modular_inequality, run_rate_suite, run_uniform_convergence,
};

use serde::Serialize;

use crate::kfunctional::RateBoundReport;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ReportKind {
    Uniform,
    Modular,
    Inequality,
    Rate,
}

impl ReportKind {
    pub fn stem(self) -> &'static str {
        match self {
            ReportKind::Uniform => "uniform",
            ReportKind::Modular => "modular",
            ReportKind::Inequality => "inequality",
            ReportKind::Rate => "rate",
        }
    }
}

/// One sweep row. Absent quantities are empty in CSV and `null` in JSON.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRecord {
    pub kernel: String,
    pub phi: Option<String>,
    pub function: String,
    pub n: u32,
    pub lambda: Option<f64>,
    pub sup_error: Option<f64>,
    pub modular_error: Option<f64>,
    pub denom_min: f64,
    pub bound_lhs: Option<f64>,
    pub bound_rhs: Option<f64>,
    /// `None` where no inequality applies or the denominator bound failed.
    pub pass: Option<bool>,
}

/// An aggregated verdict over the `n` axis.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub kernel: String,
    pub phi: Option<String>,
    pub function: String,
    pub lambda: Option<f64>,
    pub pass: bool,
    pub detail: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Summary {
    pub checks: usize,
    pub passed: usize,
    pub failed: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepReport {
    pub kind: ReportKind,
    pub config: ExperimentConfig,
    pub config_hash: String,
    pub version: String,
    pub records: Vec<SweepRecord>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub rate_records: Vec<RateBoundReport>,
    pub checks: Vec<Check>,
    pub warnings: Vec<String>,
    pub summary: Summary,
}

impl SweepReport {
    fn new(kind: ReportKind, config: &ExperimentConfig) -> Self {
        Self {
            kind,
            config: config.clone(),
            config_hash: config.hash(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            records: Vec::new(),
            rate_records: Vec::new(),
            checks: Vec::new(),
            warnings: Vec::new(),
            summary: Summary {
                checks: 0,
                passed: 0,
                failed: 0,
            },
        }
    }

    fn finish(mut self) -> Self {
        let passed = self.checks.iter().filter(|c| c.pass).count();
        self.summary = Summary {
            checks: self.checks.len(),
            passed,
            failed: self.checks.len() - passed,
        };
        self
    }

    pub fn all_passed(&self) -> bool {
        self.summary.failed == 0
    }

    pub fn checks_named<'a>(&'a self, name: &'a str) -> impl Iterator<Item = &'a Check> + 'a {
        self.checks.iter().filter(move |c| c.name == name)
    }
}

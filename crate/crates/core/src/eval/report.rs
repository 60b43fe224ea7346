//! The evaluation report artifact and its JSON/CSV emitters.
//!
//! Reports are deterministic byte for byte except the extraction timings,
//! which is why `with_zeroed_timings` exists: it is the canonical form for
//! comparing runs.

use super::metrics::CurvePoint;
use crate::error::{Error, Result};
use crate::fingerprint::Method;
use crate::suspects::{SuspectKind, Tag};
use serde::{Deserialize, Serialize};
use std::io::Write;
use std::path::Path;
use std::str::FromStr;

pub const REPORT_VERSION: u32 = 1;

/// One suspect's matching rate against the fingerprint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuspectRate {
    pub kind: SuspectKind,
    pub tag: Tag,
    pub matches: usize,
    pub total: usize,
    pub matching_rate: f64,
    pub test_accuracy: f64,
}

/// Results for one grid value of the swept parameter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridResult {
    pub param: f64,
    pub extraction_seconds: f64,
    pub rates: Vec<SuspectRate>,
    pub curve: Vec<CurvePoint>,
    pub aruc: f64,
    pub auc: f64,
    pub gap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub version: u32,
    pub method: Method,
    /// Which knob the grid sweeps: "k", "epsilon", or "none".
    pub param_name: String,
    pub seed: u64,
    pub grid: Vec<GridResult>,
    /// Index into `grid` with the highest ARUC (ties take the first).
    pub best_index: usize,
    pub best_param: f64,
    pub best_aruc: f64,
    /// Echo of the configuration that produced this report.
    pub config: serde_json::Value,
}

impl EvalReport {
    /// Copy with every timing field set to zero; two runs of the same
    /// experiment must serialize this identically.
    pub fn with_zeroed_timings(&self) -> EvalReport {
        let mut out = self.clone();
        for g in &mut out.grid {
            g.extraction_seconds = 0.0;
        }
        out
    }

    /// The calibrated threshold: the grid tau maximizing min(R, U) on the
    /// best grid entry's curve, ties to the smallest tau.
    pub fn calibrated_tau(&self) -> Result<f64> {
        let best = self
            .grid
            .get(self.best_index)
            .ok_or_else(|| Error::Format("report best_index out of range".into()))?;
        let mut tau = None;
        let mut score = f64::NEG_INFINITY;
        for point in &best.curve {
            let m = point.robustness.min(point.uniqueness);
            if m > score {
                score = m;
                tau = Some(point.tau);
            }
        }
        tau.ok_or_else(|| Error::Format("report curve is empty".into()))
    }
}

pub fn report_json(report: &EvalReport) -> Result<String> {
    let mut text = serde_json::to_string_pretty(report)?;
    text.push('\n');
    Ok(text)
}

pub fn write_report(report: &EvalReport, path: &Path) -> Result<()> {
    std::fs::write(path, report_json(report)?)?;
    Ok(())
}

pub fn load_report(path: &Path) -> Result<EvalReport> {
    let text = std::fs::read_to_string(path)?;
    let report: EvalReport =
        serde_json::from_str(&text).map_err(|e| Error::Format(format!("bad report: {e}")))?;
    if report.version != REPORT_VERSION {
        return Err(Error::Format(format!("unsupported report version {}", report.version)));
    }
    Ok(report)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Json,
    Csv,
}

impl FromStr for ReportFormat {
    type Err = Error;
    fn from_str(s: &str) -> Result<ReportFormat> {
        match s {
            "json" => Ok(ReportFormat::Json),
            "csv" => Ok(ReportFormat::Csv),
            other => Err(Error::Input(format!("unknown report format '{other}'"))),
        }
    }
}

/// The best grid entry's threshold curve as CSV: a header, one row per
/// grid tau, and a trailing summary row with the scalar metrics.
pub fn write_curve_csv(report: &EvalReport, path: &Path) -> Result<()> {
    let best = report
        .grid
        .get(report.best_index)
        .ok_or_else(|| Error::Format("report best_index out of range".into()))?;
    let mut out = Vec::new();
    writeln!(out, "tau,robustness,uniqueness,min").expect("vec write");
    for p in &best.curve {
        writeln!(
            out,
            "{},{},{},{}",
            p.tau,
            p.robustness,
            p.uniqueness,
            p.robustness.min(p.uniqueness)
        )
        .expect("vec write");
    }
    writeln!(out, "summary,{},{},{}", best.aruc, best.auc, best.gap).expect("vec write");
    std::fs::write(path, out)?;
    Ok(())
}

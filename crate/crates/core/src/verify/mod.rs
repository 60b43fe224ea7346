//! Fingerprint verification: query a suspect oracle on the fingerprint
//! points and compare its labels against the recorded ones.

mod oracle;
mod remote;

pub use oracle::{Oracle, OracleDescriptor};
pub use remote::{PipeOracle, PipeOracleConfig};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::fingerprint::Fingerprint;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Matching rate kept as an exact count, so callers can compare the float
/// against a threshold without rounding surprises.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MatchingRate {
    pub matches: usize,
    pub total: usize,
}

impl MatchingRate {
    pub fn value(&self) -> f64 {
        self.matches as f64 / self.total as f64
    }
}

/// The verification outcome, printed by the CLI as JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub matching_rate: f64,
    pub matches: usize,
    pub total: usize,
    pub tau: f64,
    /// 1 when matching_rate >= tau, else 0. A decision, not an error.
    pub decision: u8,
    /// Per-point agreement, in fingerprint order.
    pub mask: Vec<bool>,
}

/// Query the oracle on every fingerprint point. Failures surface as
/// `Error::Query` with the offending point index.
pub fn matching_details(fp: &Fingerprint, oracle: &dyn Oracle) -> Result<(MatchingRate, Vec<bool>)> {
    fp.validate()?;
    if !oracle.adapts_input_dim() && oracle.input_dim() != fp.d {
        return Err(Error::Input(format!(
            "fingerprint dimension {} does not match oracle input {}",
            fp.d,
            oracle.input_dim()
        )));
    }
    let query = |idx: usize| -> Result<bool> {
        let pred = oracle.predict(&fp.points[idx]).map_err(|e| Error::Query {
            index: idx,
            msg: e.to_string(),
        })?;
        Ok(pred == fp.labels[idx])
    };
    let mask: Vec<bool> = if oracle.concurrent_safe() {
        (0..fp.n).into_par_iter().map(query).collect::<Result<_>>()?
    } else {
        (0..fp.n).map(query).collect::<Result<_>>()?
    };
    let matches = mask.iter().filter(|&&m| m).count();
    Ok((MatchingRate { matches, total: fp.n }, mask))
}

pub fn matching_rate(fp: &Fingerprint, oracle: &dyn Oracle) -> Result<MatchingRate> {
    matching_details(fp, oracle).map(|(rate, _)| rate)
}

/// Decide ownership at threshold tau. tau has no default anywhere in this
/// crate; callers must pick one (or calibrate it from an evaluation run).
pub fn verify(fp: &Fingerprint, oracle: &dyn Oracle, tau: f64) -> Result<Verdict> {
    if !(tau.is_finite() && (0.0..=1.0).contains(&tau)) {
        return Err(Error::Input(format!("tau must lie in [0, 1], got {tau}")));
    }
    let (rate, mask) = matching_details(fp, oracle)?;
    let value = rate.value();
    Ok(Verdict {
        matching_rate: value,
        matches: rate.matches,
        total: rate.total,
        tau,
        decision: u8::from(value >= tau),
        mask,
    })
}

/// Fraction of a labeled dataset the oracle gets right.
pub fn oracle_accuracy(oracle: &dyn Oracle, data: &Dataset) -> Result<f64> {
    if !oracle.adapts_input_dim() && oracle.input_dim() != data.d {
        return Err(Error::Input(format!(
            "dataset dimension {} does not match oracle input {}",
            data.d,
            oracle.input_dim()
        )));
    }
    let correct = |idx: usize| -> Result<usize> {
        let pred = oracle.predict(&data.points[idx]).map_err(|e| Error::Query {
            index: idx,
            msg: e.to_string(),
        })?;
        Ok(usize::from(pred == data.labels[idx]))
    };
    let total: usize = if oracle.concurrent_safe() {
        (0..data.len())
            .into_par_iter()
            .map(correct)
            .collect::<Result<Vec<_>>>()?
            .into_iter()
            .sum()
    } else {
        (0..data.len()).map(correct).collect::<Result<Vec<_>>>()?.into_iter().sum()
    };
    Ok(total as f64 / data.len() as f64)
}

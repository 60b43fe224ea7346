//! Threshold-sweep metrics over positive and negative matching rates.
//!
//! Robustness R(tau) is the fraction of positives at or above tau;
//! uniqueness U(tau) is the fraction of negatives strictly below it. ARUC
//! integrates min(R, U) over a uniform tau grid, so it is high only when
//! some threshold separates the populations cleanly.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Grid resolution used by default: tau = 1/100 .. 100/100.
pub const DEFAULT_GRID: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub tau: f64,
    pub robustness: f64,
    pub uniqueness: f64,
}

fn check_rates(name: &str, rates: &[f64]) -> Result<()> {
    if rates.is_empty() {
        return Err(Error::Input(format!("{name} rates must be non-empty")));
    }
    if rates.iter().any(|r| !r.is_finite() || *r < 0.0 || *r > 1.0) {
        return Err(Error::Input(format!("{name} rates must lie in [0, 1]")));
    }
    Ok(())
}

fn check_tau(tau: f64) -> Result<()> {
    if !(tau.is_finite() && (0.0..=1.0).contains(&tau)) {
        return Err(Error::Input(format!("tau must lie in [0, 1], got {tau}")));
    }
    Ok(())
}

/// Fraction of positive suspects whose matching rate reaches tau.
pub fn robustness(positives: &[f64], tau: f64) -> Result<f64> {
    check_rates("positive", positives)?;
    check_tau(tau)?;
    Ok(positives.iter().filter(|r| **r >= tau).count() as f64 / positives.len() as f64)
}

/// Fraction of negative suspects whose matching rate stays below tau.
pub fn uniqueness(negatives: &[f64], tau: f64) -> Result<f64> {
    check_rates("negative", negatives)?;
    check_tau(tau)?;
    Ok(negatives.iter().filter(|r| **r < tau).count() as f64 / negatives.len() as f64)
}

/// R and U on the uniform grid tau = i/grid for i = 1..=grid.
pub fn curve(positives: &[f64], negatives: &[f64], grid: usize) -> Result<Vec<CurvePoint>> {
    if grid == 0 {
        return Err(Error::Input("grid resolution must be >= 1".into()));
    }
    check_rates("positive", positives)?;
    check_rates("negative", negatives)?;
    (1..=grid)
        .map(|i| {
            let tau = i as f64 / grid as f64;
            Ok(CurvePoint {
                tau,
                robustness: robustness(positives, tau)?,
                uniqueness: uniqueness(negatives, tau)?,
            })
        })
        .collect()
}

/// Area under min(R(tau), U(tau)) on the uniform grid: the average of the
/// pointwise minimum, in [0, 1].
pub fn aruc(positives: &[f64], negatives: &[f64], grid: usize) -> Result<f64> {
    let pts = curve(positives, negatives, grid)?;
    Ok(pts.iter().map(|p| p.robustness.min(p.uniqueness)).sum::<f64>() / grid as f64)
}

/// Probability a random positive outranks a random negative, ties at 1/2
/// (the Mann-Whitney statistic).
pub fn auc(positives: &[f64], negatives: &[f64]) -> Result<f64> {
    check_rates("positive", positives)?;
    check_rates("negative", negatives)?;
    let mut score = 0.0;
    for p in positives {
        for n in negatives {
            score += if p > n {
                1.0
            } else if p == n {
                0.5
            } else {
                0.0
            };
        }
    }
    Ok(score / (positives.len() * negatives.len()) as f64)
}

/// Worst positive minus best negative; positive iff a threshold separates
/// the populations perfectly.
pub fn rate_gap(positives: &[f64], negatives: &[f64]) -> Result<f64> {
    check_rates("positive", positives)?;
    check_rates("negative", negatives)?;
    let worst_pos = positives.iter().cloned().fold(f64::INFINITY, f64::min);
    let best_neg = negatives.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    Ok(worst_pos - best_neg)
}

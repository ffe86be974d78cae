//! Empirical occurrence probabilities.
//!
//! The frequentist estimate of a pocket's probability is its relative
//! frequency `n(x) / n`. [`tally`] gives the estimate over a whole series;
//! [`frequency_path`] gives it after every prefix so convergence can be
//! inspected and modeled.

use serde::{Deserialize, Serialize};

use crate::spin_data::{Pocket, SpinSeries};
use crate::{Error, Result, POCKETS};

/// Default number of leading path values skipped by [`pocket_report`].
pub const DEFAULT_BURN_IN: usize = 500;

/// Counts, probability mass and cumulative distribution over the 37 pockets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalDistribution {
    counts: Vec<u64>,
    total: u64,
    pmf: Vec<f64>,
    cdf: Vec<f64>,
}

impl EmpiricalDistribution {
    pub fn from_counts(counts: [u64; POCKETS]) -> Result<Self> {
        let total: u64 = counts.iter().sum();
        if total == 0 {
            return Err(Error::EmptySeries);
        }
        let n = total as f64;
        let pmf = counts.iter().map(|&c| c as f64 / n).collect();
        let cdf = counts
            .iter()
            .scan(0u64, |acc, &c| {
                *acc += c;
                Some(*acc as f64 / n)
            })
            .collect();
        Ok(Self {
            counts: counts.to_vec(),
            total,
            pmf,
            cdf,
        })
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn count(&self, pocket: Pocket) -> u64 {
        self.counts[pocket as usize]
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn pmf(&self) -> &[f64] {
        &self.pmf
    }

    pub fn probability(&self, pocket: Pocket) -> f64 {
        self.pmf[pocket as usize]
    }

    pub fn cdf(&self) -> &[f64] {
        &self.cdf
    }

    /// Distribution of the union of both samples.
    pub fn merge(&self, other: &Self) -> Self {
        let mut counts = [0u64; POCKETS];
        for (i, c) in counts.iter_mut().enumerate() {
            *c = self.counts[i] + other.counts[i];
        }
        Self::from_counts(counts).expect("merged total is positive")
    }
}

pub fn count_outcomes(outcomes: &[Pocket]) -> [u64; POCKETS] {
    let mut counts = [0u64; POCKETS];
    for &p in outcomes {
        counts[p as usize] += 1;
    }
    counts
}

pub fn tally(series: &SpinSeries) -> Result<EmpiricalDistribution> {
    if series.is_empty() {
        return Err(Error::EmptySeries);
    }
    EmpiricalDistribution::from_counts(count_outcomes(series.outcomes()))
}

/// Running relative frequency of one pocket.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrequencyPath {
    pub pocket: Pocket,
    /// `path[n - 1]` is the pocket's frequency over the first `n` spins.
    pub path: Vec<f64>,
    pub mean: f64,
    /// Population standard deviation of the path values.
    pub stdev: f64,
}

pub fn frequency_path(series: &SpinSeries, pocket: Pocket) -> Result<FrequencyPath> {
    if series.is_empty() {
        return Err(Error::EmptySeries);
    }
    if pocket as usize >= POCKETS {
        return Err(Error::Range {
            line: 0,
            value: i64::from(pocket),
        });
    }
    let mut hits = 0u64;
    let path: Vec<f64> = series
        .outcomes()
        .iter()
        .enumerate()
        .map(|(i, &p)| {
            hits += u64::from(p == pocket);
            hits as f64 / (i + 1) as f64
        })
        .collect();
    let (mean, stdev) = mean_and_stdev(&path);
    Ok(FrequencyPath {
        pocket,
        path,
        mean,
        stdev,
    })
}

/// Mean and population standard deviation of the path after skipping the
/// first `burn_in` values.
pub fn rolling_stats(path: &FrequencyPath, burn_in: usize) -> Result<(f64, f64)> {
    if burn_in >= path.path.len() {
        return Err(Error::BurnInTooLarge {
            burn_in,
            len: path.path.len(),
        });
    }
    Ok(mean_and_stdev(&path.path[burn_in..]))
}

pub(crate) fn mean_and_stdev(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (0.0, 0.0);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// One row of the per-pocket JSON report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PocketReport {
    pub pocket: Pocket,
    pub count: u64,
    pub probability: f64,
    pub path_mean: f64,
    pub path_stdev: f64,
}

/// Per-pocket count, probability and post-burn-in path statistics for all 37
/// pockets. A burn-in longer than the series is clamped so at least the final
/// path value is used.
pub fn pocket_report(series: &SpinSeries, burn_in: usize) -> Result<Vec<PocketReport>> {
    let dist = tally(series)?;
    let burn_in = burn_in.min(series.len() - 1);
    (0..POCKETS as Pocket)
        .map(|pocket| {
            let fp = frequency_path(series, pocket)?;
            let (path_mean, path_stdev) = rolling_stats(&fp, burn_in)?;
            Ok(PocketReport {
                pocket,
                count: dist.count(pocket),
                probability: dist.probability(pocket),
                path_mean,
                path_stdev,
            })
        })
        .collect()
}

/// Renders a probability as a percentage with two decimals, e.g. `3.22%`.
pub fn format_percent(p: f64) -> String {
    format!("{:.2}%", 100.0 * p)
}

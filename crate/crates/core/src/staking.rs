//! Expected value and wager sizing for straight-up bets.

use serde::{Deserialize, Serialize};

use crate::{Error, Result, POCKETS};

/// Net odds, win probability and the implied expectation per unit staked.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub payout_b: f64,
    pub win_prob: f64,
    pub ev_per_unit: f64,
}

impl Edge {
    pub fn new(payout_b: f64, win_prob: f64) -> Self {
        Self {
            payout_b,
            win_prob,
            ev_per_unit: expected_value(payout_b, win_prob, 1.0),
        }
    }

    pub fn is_favorable(&self) -> bool {
        self.ev_per_unit > 0.0
    }

    pub fn kelly(&self) -> KellyFraction {
        kelly_fraction(self.payout_b, self.win_prob)
    }
}

/// Fraction of current capital to wager. Negative means the bet has no edge.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct KellyFraction(pub f64);

impl KellyFraction {
    pub fn value(self) -> f64 {
        self.0
    }

    pub fn percent(self) -> f64 {
        100.0 * self.0
    }

    /// The fraction actually bet: scaled by `multiplier`, floored at zero.
    pub fn stake_fraction(self, multiplier: f64) -> f64 {
        (self.0 * multiplier).max(0.0)
    }
}

/// How the per-number Kelly fraction is derived when several pockets are
/// backed on the same spin.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KellyCombination {
    /// Straight-up odds (35) against the summed probability of all selected
    /// pockets. This reproduces the published walk-forward position sizes.
    #[default]
    SummedProbability,
    /// Treat the k-number cover as one bet with net odds `37/k - 1`
    /// (a split bet pays 17 for k = 2).
    CoverOdds,
}

/// `stake * (b * p - (1 - p))`.
pub fn expected_value(payout_b: f64, win_prob: f64, stake: f64) -> f64 {
    stake * (payout_b * win_prob - (1.0 - win_prob))
}

/// Kelly criterion `K = (b p - q) / b`, returned unclamped.
pub fn kelly_fraction(payout_b: f64, win_prob: f64) -> KellyFraction {
    let q = 1.0 - win_prob;
    KellyFraction((payout_b * win_prob - q) / payout_b)
}

/// Total Kelly fraction for backing every pocket in `selected_probs` at once,
/// using straight-up odds on the summed probability. The total is meant to be
/// split equally across the pockets.
pub fn combined_kelly(selected_probs: &[f64]) -> Result<KellyFraction> {
    combined_kelly_with(selected_probs, crate::STRAIGHT_UP_PAYOUT, KellyCombination::SummedProbability)
}

pub fn combined_kelly_with(
    selected_probs: &[f64],
    payout_b: f64,
    mode: KellyCombination,
) -> Result<KellyFraction> {
    if selected_probs.is_empty() {
        return Err(Error::InvalidParams("no selected probabilities".into()));
    }
    if selected_probs.iter().any(|p| !(0.0..=1.0).contains(p)) {
        return Err(Error::InvalidParams("probabilities must lie in [0, 1]".into()));
    }
    let p: f64 = selected_probs.iter().sum();
    if p > 1.0 + 1e-12 {
        return Err(Error::InvalidParams(format!("probabilities sum to {p} > 1")));
    }
    let b = match mode {
        KellyCombination::SummedProbability => payout_b,
        KellyCombination::CoverOdds => {
            let k = selected_probs.len() as f64;
            (payout_b + 1.0) / k - 1.0
        }
    };
    if b <= 0.0 {
        return Err(Error::InvalidParams(format!(
            "a {}-number cover has no positive net odds",
            selected_probs.len()
        )));
    }
    Ok(kelly_fraction(b, p))
}

/// Flat wager size: the mean of the stakes realized by a Kelly run.
pub fn flat_stake_from_kelly_run(kelly_stakes: &[f64]) -> Result<f64> {
    if kelly_stakes.is_empty() {
        return Err(Error::EmptySequence);
    }
    Ok(kelly_stakes.iter().sum::<f64>() / kelly_stakes.len() as f64)
}

/// Probability of a single pocket on a fair wheel.
pub fn fair_probability() -> f64 {
    1.0 / POCKETS as f64
}

//! Reference values from the recorded 5,000-spin in-sample window and the
//! walk-forward plan applied to the full 10,980-spin recording.
//!
//! The raw spins are not public; [`reference_in_sample_series`] rebuilds a
//! series with the same per-pocket counts so that every count-based statistic
//! matches the published table.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::spin_data::{Pocket, SpinSeries};
use crate::POCKETS;

/// Published in-sample occurrence probabilities, in percent, pockets 0..=36.
pub const REFERENCE_PROBABILITY_PCT: [f64; POCKETS] = [
    2.84, 2.76, 2.84, 2.64, 2.60, 2.44, 2.50, 2.90, 2.86, 3.22, 2.90, 2.78, 2.44, 2.68, 2.76, 2.78,
    2.36, 2.70, 2.32, 2.44, 2.96, 2.56, 3.08, 2.86, 2.72, 2.86, 2.62, 2.66, 2.60, 2.98, 2.86, 2.56,
    2.70, 2.42, 2.48, 2.74, 2.58,
];

pub const REFERENCE_IN_SAMPLE: usize = 5000;

/// Out-of-sample segment lengths of the seven walk-forward runs.
pub const REFERENCE_SEGMENTS: [usize; 7] = [2479, 499, 501, 365, 492, 759, 885];

pub const REFERENCE_TOTAL_SPINS: usize = 10_980;

pub const REFERENCE_INITIAL_CAPITAL: f64 = 2000.0;

pub const REFERENCE_FILTER_THRESHOLD: f64 = 0.03;

/// `round(5000 * p)` for each published probability. Sums to exactly 5,000.
pub fn reference_in_sample_counts() -> [u64; POCKETS] {
    REFERENCE_PROBABILITY_PCT.map(|pct| (REFERENCE_IN_SAMPLE as f64 * pct / 100.0).round() as u64)
}

/// A 5,000-spin series with the reference counts, shuffled by `seed`.
pub fn reference_in_sample_series(seed: u64) -> SpinSeries {
    let mut outcomes: Vec<Pocket> = reference_in_sample_counts()
        .iter()
        .enumerate()
        .flat_map(|(pocket, &n)| std::iter::repeat_n(pocket as Pocket, n as usize))
        .collect();
    outcomes.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    SpinSeries::from_valid(outcomes, "reference-in-sample")
}

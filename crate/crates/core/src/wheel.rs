//! Seeded synthetic roulette wheel.
//!
//! Spins are drawn by inverse-CDF sampling. The uniform stream comes from
//! ChaCha8 (`rand_chacha`, which guarantees value stability) seeded with
//! `seed_from_u64`; each draw takes the top 53 bits of one `next_u64` as
//! `u = bits * 2^-53`. Given the same spec and `n`, output is identical on
//! every platform.

use std::collections::BTreeMap;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::spin_data::{Pocket, SpinSeries};
use crate::{Error, Result, POCKETS};

const MASS_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WheelSpec {
    pmf: Vec<f64>,
    pub seed: u64,
    pub label: String,
}

impl WheelSpec {
    pub fn new(pmf: [f64; POCKETS], seed: u64, label: impl Into<String>) -> Result<Self> {
        if pmf.iter().any(|&p| !(p >= 0.0 && p.is_finite())) {
            return Err(Error::InvalidParams("wheel probabilities must be non-negative".into()));
        }
        let total: f64 = pmf.iter().sum();
        if (total - 1.0).abs() > MASS_TOL {
            return Err(Error::InvalidParams(format!("wheel probabilities sum to {total}")));
        }
        Ok(Self {
            pmf: pmf.to_vec(),
            seed,
            label: label.into(),
        })
    }

    pub fn pmf(&self) -> &[f64] {
        &self.pmf
    }

    pub fn cdf(&self) -> Vec<f64> {
        self.pmf
            .iter()
            .scan(0.0, |acc, &p| {
                *acc += p;
                Some(*acc)
            })
            .collect()
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }
}

/// A fair wheel: every pocket at 1/37.
pub fn unbiased() -> WheelSpec {
    WheelSpec {
        pmf: vec![1.0 / POCKETS as f64; POCKETS],
        seed: 0,
        label: "unbiased".into(),
    }
}

/// Pins the given pockets to fixed probabilities and spreads the remaining
/// mass evenly over all other pockets.
pub fn biased(overrides: &BTreeMap<Pocket, f64>) -> Result<WheelSpec> {
    if overrides.is_empty() {
        return Ok(unbiased());
    }
    for (&pocket, &p) in overrides {
        if pocket as usize >= POCKETS {
            return Err(Error::Range {
                line: 0,
                value: i64::from(pocket),
            });
        }
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::InvalidParams(format!(
                "probability {p} for pocket {pocket} is outside [0, 1]"
            )));
        }
    }
    let pinned: f64 = overrides.values().sum();
    if pinned > 1.0 + MASS_TOL {
        return Err(Error::MassOverflow(pinned));
    }
    let free = POCKETS - overrides.len();
    if free == 0 && (pinned - 1.0).abs() > MASS_TOL {
        return Err(Error::InvalidParams(format!(
            "all pockets pinned but mass is {pinned}"
        )));
    }
    let rest = if free > 0 {
        (1.0 - pinned).max(0.0) / free as f64
    } else {
        0.0
    };
    let pmf = (0..POCKETS as Pocket)
        .map(|p| overrides.get(&p).copied().unwrap_or(rest))
        .collect();
    let label = overrides
        .iter()
        .map(|(k, v)| format!("{k}={v}"))
        .collect::<Vec<_>>()
        .join(",");
    Ok(WheelSpec {
        pmf,
        seed: 0,
        label: format!("biased[{label}]"),
    })
}

/// Uniform in `[0, 1)` from the top 53 bits of one 64-bit draw.
pub(crate) fn unit_f64(rng: &mut impl RngCore) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// `n` independent spins of the wheel.
pub fn spin(spec: &WheelSpec, n: usize) -> SpinSeries {
    let cdf = spec.cdf();
    let last = spec.pmf.iter().rposition(|&p| p > 0.0).unwrap_or(0);
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let outcomes = (0..n)
        .map(|_| {
            let u = unit_f64(&mut rng);
            cdf.partition_point(|&c| c <= u).min(last) as Pocket
        })
        .collect();
    SpinSeries::from_valid(outcomes, spec.label.clone())
}

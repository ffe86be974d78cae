//! Biased roulette wheel analysis treated as a quantitative trading strategy.
//!
//! The pipeline mirrors how a desk would evaluate a systematic strategy:
//!
//! 1. [`spin_data`] ingests spin streams and cuts them into an in-sample
//!    window plus out-of-sample segments.
//! 2. [`empirical`] estimates per-pocket occurrence probabilities and their
//!    running-frequency paths.
//! 3. [`bias_test`] runs a chi-square goodness-of-fit test against a fair wheel.
//! 4. [`staking`] turns an estimated edge into a Kelly or flat wager.
//! 5. [`backtest`] replays a strategy spin by spin and reports P&L, drawdown,
//!    Calmar ratio and loss streaks.
//! 6. [`walk_forward`] repeats estimation and backtesting over an anchored,
//!    growing in-sample window.
//! 7. [`ou`] models a pocket's running probability as an Ornstein-Uhlenbeck
//!    process: simulation, closed-form moments and AR(1) calibration.
//!
//! [`wheel`] provides a seeded synthetic wheel (fair or biased) used in place
//! of recorded casino data, and [`fixtures`] ships the reference in-sample
//! probability table and walk-forward plan.

pub mod backtest;
pub mod bias_test;
pub mod cli;
pub mod empirical;
pub mod error;
pub mod fixtures;
pub mod ou;
pub mod spin_data;
pub mod staking;
pub mod walk_forward;
pub mod wheel;

pub use error::{Error, Result};

/// Number of pockets on a European wheel (0 through 36).
pub const POCKETS: usize = 37;

/// Net odds of a straight-up bet.
pub const STRAIGHT_UP_PAYOUT: f64 = 35.0;

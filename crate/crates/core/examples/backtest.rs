//! Estimate on one window, bet on the next, and print the performance summary.
//!
//! cargo run --example backtest

use std::collections::BTreeMap;

use biased_wheel::backtest::{run_backtest, Staking, StrategyConfig};
use biased_wheel::empirical::tally;
use biased_wheel::wheel;

fn main() -> biased_wheel::Result<()> {
    let spec = wheel::biased(&BTreeMap::from([(9, 0.0322), (22, 0.0308)]))?.with_seed(42);
    let spins = wheel::spin(&spec, 7_500);
    let estimation = spins.slice(0, 5_000, "in-sample");
    let trading = spins.slice(5_000, spins.len(), "out-of-sample");
    let dist = tally(&estimation)?;

    let kelly = StrategyConfig::default();
    let half = kelly.with_staking(Staking::Kelly { multiplier: 0.5 });
    let flat = kelly.with_staking(Staking::Flat { stake: 30.0 });

    for (name, config) in [("kelly", kelly), ("half kelly", half), ("flat $30", flat)] {
        let r = run_backtest(&trading, &dist, &config)?;
        let s = &r.summary;
        println!(
            "{name:<10} numbers {:?} bets {:>4} wins {:>3} pnl {:>9.2} ({:>6.2}%) mdd {:>8.2} calmar {:>6.3} worst streak {}",
            r.selected_numbers,
            s.n_obs,
            s.wins,
            s.pnl,
            s.pct_pnl,
            s.max_drawdown,
            s.calmar,
            s.max_consecutive_losses,
        );
    }
    Ok(())
}

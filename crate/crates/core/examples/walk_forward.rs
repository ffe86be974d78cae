//! Anchored walk-forward over seven out-of-sample segments, Kelly against flat staking.
//!
//! cargo run --example walk_forward

use std::collections::BTreeMap;

use biased_wheel::backtest::StrategyConfig;
use biased_wheel::fixtures::{REFERENCE_IN_SAMPLE, REFERENCE_SEGMENTS, REFERENCE_TOTAL_SPINS};
use biased_wheel::spin_data::split;
use biased_wheel::walk_forward::{aggregate, run_wfo, WfoPlan};
use biased_wheel::wheel;

fn main() -> biased_wheel::Result<()> {
    let spec = wheel::biased(&BTreeMap::from([(9, 0.0322), (22, 0.0308)]))?.with_seed(2016);
    let spins = wheel::spin(&spec, REFERENCE_TOTAL_SPINS);
    let plan = WfoPlan::anchored(
        split(&spins, REFERENCE_IN_SAMPLE, &REFERENCE_SEGMENTS)?,
        StrategyConfig::default(),
    );

    let reports = run_wfo(&plan)?;
    let agg = aggregate(&reports)?;
    println!("run  window  bets  numbers     kelly%   flat$   kelly pnl  flat pnl");
    for (r, c) in reports.iter().zip(&agg.runs) {
        println!(
            "{:>3}  {:>6}  {:>4}  {:<10}  {:>6.3}  {:>6.2}  {:>9.2}  {:>8.2}",
            r.run_index,
            r.in_sample_len,
            c.n_obs,
            format!("{:?}", r.selected_numbers),
            100.0 * r.kelly_fraction,
            r.flat_stake,
            c.kelly_pnl,
            c.flat_pnl,
        );
    }
    println!(
        "\ntotal pnl: kelly {:.2} flat {:.2}; profitable runs: kelly {:?} flat {:?}",
        agg.kelly.total_pnl, agg.flat.total_pnl, agg.kelly.profitable_runs, agg.flat.profitable_runs
    );
    Ok(())
}

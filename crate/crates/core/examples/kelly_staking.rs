//! Expected value and Kelly sizing for straight-up bets.
//!
//! cargo run --example kelly_staking

use biased_wheel::staking::{
    combined_kelly, combined_kelly_with, expected_value, fair_probability, kelly_fraction,
    KellyCombination,
};
use biased_wheel::STRAIGHT_UP_PAYOUT as B;

fn main() -> biased_wheel::Result<()> {
    println!("EV per unit, fair pocket: {:.5}", expected_value(B, fair_probability(), 1.0));
    println!("EV per unit, 3% pocket:   {:.5}", expected_value(B, 0.03, 1.0));

    for p in [fair_probability(), 0.0280, 0.0300, 0.0322, 0.0350] {
        println!("p = {p:.4}  kelly = {:>8.4}%", kelly_fraction(B, p).percent());
    }

    let selected = [0.0322, 0.0308];
    let full = combined_kelly(&selected)?;
    println!("\ntwo numbers {selected:?}");
    println!("  summed probability: full {:.4}%, half {:.4}%", full.percent(), 100.0 * full.stake_fraction(0.5));
    let cover = combined_kelly_with(&selected, B, KellyCombination::CoverOdds)?;
    println!("  cover odds:         full {:.4}%", cover.percent());

    let capital = 2000.0;
    println!("  stake on ${capital}: ${:.2}", capital * full.stake_fraction(1.0));
    Ok(())
}

//! Spin a fair wheel and a biased one, then compare pocket frequencies.
//!
//! cargo run --example simulate_wheel

use std::collections::BTreeMap;

use biased_wheel::empirical::{format_percent, tally};
use biased_wheel::wheel;

fn main() -> biased_wheel::Result<()> {
    let fair = wheel::unbiased().with_seed(2016);
    let skewed = wheel::biased(&BTreeMap::from([(9, 0.0322), (22, 0.0308)]))?.with_seed(2016);

    let n = 100_000;
    let a = tally(&wheel::spin(&fair, n))?;
    let b = tally(&wheel::spin(&skewed, n))?;

    println!("pocket  fair      biased    target");
    for pocket in 0..37u8 {
        println!(
            "{pocket:>6}  {:>8}  {:>8}  {:>8}",
            format_percent(a.probability(pocket)),
            format_percent(b.probability(pocket)),
            format_percent(skewed.pmf()[pocket as usize]),
        );
    }

    let first = wheel::spin(&fair, 12);
    println!("\nfirst 12 spins of seed 2016: {:?}", first.outcomes());
    Ok(())
}

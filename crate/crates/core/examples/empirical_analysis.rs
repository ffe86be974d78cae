//! Per-pocket probabilities and running-frequency statistics.
//!
//! cargo run --example empirical_analysis

use biased_wheel::empirical::{format_percent, frequency_path, pocket_report, DEFAULT_BURN_IN};
use biased_wheel::fixtures;

fn main() -> biased_wheel::Result<()> {
    let series = fixtures::reference_in_sample_series(1);
    let mut rows = pocket_report(&series, DEFAULT_BURN_IN)?;
    rows.sort_by(|a, b| b.probability.total_cmp(&a.probability));

    println!("{} spins, burn-in {DEFAULT_BURN_IN}", series.len());
    println!("pocket  count  prob      path mean  path sd");
    for r in rows.iter().take(8) {
        println!(
            "{:>6}  {:>5}  {:>8}  {:.5}    {:.6}",
            r.pocket,
            r.count,
            format_percent(r.probability),
            r.path_mean,
            r.path_stdev
        );
    }

    // The running frequency of the hottest pocket settles towards its long-run value.
    let hot = rows[0].pocket;
    let path = frequency_path(&series, hot)?;
    for n in [100, 500, 1000, 2500, 5000] {
        println!("pocket {hot} after {n:>4} spins: {:.4}", path.path[n - 1]);
    }
    Ok(())
}

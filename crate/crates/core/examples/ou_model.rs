//! Mean-reverting model of a pocket's running frequency: simulate, compare
//! with the analytic moments, then recover the parameters from one path.
//!
//! cargo run --example ou_model

use biased_wheel::ou::{self, OuParams};

fn main() -> biased_wheel::Result<()> {
    let params = OuParams::reference();
    println!(
        "theta {} mu {} sigma {} p0 {}; half-life {:.0} steps",
        params.theta,
        params.mu,
        params.sigma,
        params.p0,
        params.half_life()
    );

    let ensemble = ou::simulate(&params, 2000, 500, 1.0, 7)?;
    println!("step  analytic mean  ensemble mean  analytic sd  ensemble sd");
    for k in [1, 10, 100, 500, 1000, 2000] {
        let (m, v) = ou::moments(&params, k as f64);
        println!(
            "{k:>4}  {m:.6}       {:.6}       {:.3e}    {:.3e}",
            ensemble.step_mean(k),
            v.sqrt(),
            ensemble.step_variance(k).sqrt()
        );
    }

    let long = ou::simulate(&params, 5000, 1, 1.0, 31)?;
    let fit = ou::calibrate(long.path(0), 1.0, 0)?;
    println!(
        "\nfit from one 5000-step path: theta {:.5} mu {:.5} sigma {:.6}",
        fit.params.theta, fit.params.mu, fit.params.sigma
    );
    Ok(())
}

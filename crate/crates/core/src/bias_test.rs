//! Chi-square goodness-of-fit test of a wheel against the fair 1/37 expectation.

use serde::{Deserialize, Serialize};
use statrs::function::gamma::checked_gamma_ur;

use crate::empirical::EmpiricalDistribution;
use crate::{Error, Result, POCKETS};

/// Degrees of freedom for a 37-cell goodness-of-fit test.
pub const WHEEL_DOF: u32 = POCKETS as u32 - 1;

const CRITICAL_REL_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChiSquareReport {
    pub statistic: f64,
    pub dof: u32,
    pub alpha: f64,
    pub critical_value: f64,
    pub reject_null: bool,
    pub p_value: f64,
}

/// `sum (O_i - E_i)^2 / E_i` with `E_i = total / 37`.
///
/// Requires an expected count of at least one per pocket (37 spins).
pub fn chi_square_statistic(dist: &EmpiricalDistribution) -> Result<f64> {
    let total = dist.total();
    if total < POCKETS as u64 {
        return Err(Error::InsufficientData {
            required: POCKETS as u64,
            actual: total,
        });
    }
    let expected = total as f64 / POCKETS as f64;
    if expected < 5.0 {
        log::warn!(
            "expected count per pocket is {expected:.2} (< 5); the chi-square approximation is unreliable"
        );
    }
    Ok(dist
        .counts()
        .iter()
        .map(|&o| (o as f64 - expected).powi(2) / expected)
        .sum())
}

/// Upper-tail probability `P(X > x)` for `X ~ chi-square(dof)`, i.e. the
/// regularized upper incomplete gamma `Q(dof/2, x/2)`.
pub fn chi_square_sf(dof: u32, x: f64) -> Result<f64> {
    if dof == 0 {
        return Err(Error::InvalidParams("dof must be at least 1".into()));
    }
    if x <= 0.0 {
        return Ok(1.0);
    }
    checked_gamma_ur(f64::from(dof) / 2.0, x / 2.0)
        .map_err(|e| Error::InvalidParams(e.to_string()))
}

/// The `x` with `P(X > x) = alpha` under chi-square(`dof`), found by
/// bracketing and bisection on [`chi_square_sf`].
pub fn chi_square_critical(dof: u32, alpha: f64) -> Result<f64> {
    if dof == 0 {
        return Err(Error::InvalidParams("dof must be at least 1".into()));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidParams(format!(
            "alpha must lie in (0, 1), got {alpha}"
        )));
    }

    let mut lo = 0.0;
    let mut hi = f64::from(dof).max(1.0);
    while chi_square_sf(dof, hi)? > alpha {
        lo = hi;
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if chi_square_sf(dof, mid)? > alpha {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= CRITICAL_REL_TOL * hi {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Tests H0 "the wheel is fair" at significance `alpha`.
pub fn test_fairness(dist: &EmpiricalDistribution, alpha: f64) -> Result<ChiSquareReport> {
    let statistic = chi_square_statistic(dist)?;
    let critical_value = chi_square_critical(WHEEL_DOF, alpha)?;
    Ok(ChiSquareReport {
        statistic,
        dof: WHEEL_DOF,
        alpha,
        critical_value,
        reject_null: statistic > critical_value,
        p_value: chi_square_sf(WHEEL_DOF, statistic)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use proptest::prelude::*;

    /// Closed-form survival function for even dof:
    /// `Q(k, y) = exp(-y) * sum_{j<k} y^j / j!` with `k = dof/2`, `y = x/2`.
    fn even_dof_sf(dof: u32, x: f64) -> f64 {
        let y = x / 2.0;
        let mut term = 1.0;
        let mut sum = 1.0;
        for j in 1..dof / 2 {
            term *= y / f64::from(j);
            sum += term;
        }
        (-y).exp() * sum
    }

    /// `P(Z^2 > x)` for a standard normal by Simpson quadrature of the density
    /// over `[0, sqrt(x)]`.
    fn one_dof_sf(x: f64) -> f64 {
        let b = x.sqrt();
        let n = 20_000;
        let h = b / n as f64;
        let phi = |z: f64| (-0.5 * z * z).exp() / (2.0 * std::f64::consts::PI).sqrt();
        let mut s = phi(0.0) + phi(b);
        for i in 1..n {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            s += w * phi(i as f64 * h);
        }
        1.0 - 2.0 * s * h / 3.0
    }

    fn dist(counts: [u64; 37]) -> EmpiricalDistribution {
        EmpiricalDistribution::from_counts(counts).unwrap()
    }

    #[test]
    fn survival_matches_even_dof_closed_form() {
        for dof in [2, 4, 10, 36] {
            for x in [0.5, 3.0, 20.0, 50.998] {
                let got = chi_square_sf(dof, x).unwrap();
                assert!((got - even_dof_sf(dof, x)).abs() < 1e-12, "dof {dof} x {x}");
            }
        }
    }

    #[test]
    fn critical_36_at_5_percent() {
        let c = chi_square_critical(36, 0.05).unwrap();
        assert!((c - 50.998).abs() < 0.01, "{c}");
        assert!((even_dof_sf(36, c) - 0.05).abs() < 1e-10);
    }

    #[test]
    fn critical_one_dof() {
        let alpha = one_dof_sf(1.0);
        assert!((alpha - 0.3173).abs() < 1e-4);
        let c = chi_square_critical(1, alpha).unwrap();
        assert!((c - 1.0).abs() < 1e-3, "{c}");
    }

    #[test]
    fn critical_two_dof_closed_form() {
        let c = chi_square_critical(2, 0.05).unwrap();
        assert!((c - (-2.0 * 0.05f64.ln())).abs() < 1e-9);
        assert!((c - 5.991).abs() < 1e-3);
    }

    #[test]
    fn critical_rejects_bad_inputs() {
        assert!(chi_square_critical(0, 0.05).is_err());
        assert!(chi_square_critical(3, 0.0).is_err());
        assert!(chi_square_critical(3, 1.0).is_err());
        assert!(chi_square_critical(3, f64::NAN).is_err());
    }

    #[test]
    fn critical_monotone_over_grid() {
        let alphas = [0.001, 0.01, 0.05, 0.1, 0.5, 0.9];
        for dof in 1..=60u32 {
            let row: Vec<f64> = alphas
                .iter()
                .map(|&a| chi_square_critical(dof, a).unwrap())
                .collect();
            assert!(row.windows(2).all(|w| w[0] > w[1]), "dof {dof}");
            for (i, &a) in alphas.iter().enumerate() {
                let next = chi_square_critical(dof + 1, a).unwrap();
                assert!(next > row[i], "dof {dof} alpha {a}");
            }
        }
    }

    #[test]
    fn uniform_counts_give_zero() {
        let d = dist([10; 37]);
        assert_eq!(chi_square_statistic(&d).unwrap(), 0.0);
        let r = test_fairness(&d, 0.05).unwrap();
        assert!(!r.reject_null);
        assert_eq!(r.dof, 36);
    }

    #[test]
    fn reference_fixture_statistic() {
        let d = dist(fixtures::reference_in_sample_counts());
        let stat = chi_square_statistic(&d).unwrap();
        assert!((stat - 28.11).abs() < 0.5, "{stat}");
        let r = test_fairness(&d, 0.05).unwrap();
        assert!(!r.reject_null);
        assert!(r.statistic < r.critical_value);
    }

    #[test]
    fn two_hits_in_one_pocket() {
        let mut c = [0; 37];
        c[0] = 2;
        assert_eq!(
            chi_square_statistic(&dist(c)),
            Err(Error::InsufficientData {
                required: 37,
                actual: 2
            })
        );
        // Over 37 cells with total 2: E = 2/37,
        // (2 - E)^2/E + 36 * E = 2*37 - 2 = 72
        let e: f64 = 2.0 / 37.0;
        let direct = (2.0 - e) * (2.0 - e) / e + 36.0 * e;
        assert!((direct - 72.0).abs() < 1e-12);
    }

    #[test]
    fn doubled_zero_pocket_is_rejected() {
        // 36 pockets at 1000 and pocket 0 at 2000: total 38,000
        let mut c = [1000; 37];
        c[0] = 2000;
        let d = dist(c);
        let e = 38_000.0 / 37.0;
        let oracle = (2000.0 - e) * (2000.0 - e) / e + 36.0 * (1000.0 - e) * (1000.0 - e) / e;
        let stat = chi_square_statistic(&d).unwrap();
        assert!((stat - oracle).abs() < 1e-9 * oracle);
        assert!(test_fairness(&d, 0.05).unwrap().reject_null);
    }

    proptest! {
        #[test]
        fn statistic_non_negative_and_permutation_invariant(
            counts in prop::array::uniform32(0u64..500).prop_flat_map(|a| {
                (Just(a), prop::array::uniform5(0u64..500))
            }),
            rot in 0usize..37,
        ) {
            let (a, b) = counts;
            let mut c = [0u64; 37];
            c[..32].copy_from_slice(&a);
            c[32..].copy_from_slice(&b);
            prop_assume!(c.iter().sum::<u64>() >= 37);
            let s1 = chi_square_statistic(&dist(c)).unwrap();
            c.rotate_left(rot);
            c.reverse();
            let s2 = chi_square_statistic(&dist(c)).unwrap();
            prop_assert!(s1 >= 0.0);
            prop_assert!((s1 - s2).abs() <= 1e-9 * s1.max(1.0));
            let uniform = c.iter().all(|&x| x as f64 * 37.0 == c.iter().sum::<u64>() as f64);
            prop_assert_eq!(s1 == 0.0, uniform);
        }
    }
}

//! Ornstein-Uhlenbeck model of a pocket's running probability,
//! `dP = -theta (P - mu) dt + sigma dW`.
//!
//! Simulation uses the exact Gaussian transition
//!
//! ```text
//! P[k+1] = mu + (P[k] - mu) e^{-theta dt} + sigma sqrt((1 - e^{-2 theta dt}) / (2 theta)) Z[k]
//! ```
//!
//! so there is no step-size bias; Euler-Maruyama is available for comparison.
//! Path `j` draws its normals from ChaCha8 seeded with `seed` on stream `j`,
//! which makes every path independent of evaluation order and thread count.
//! Paths are not clipped to `[0, 1]`; see [`OuEnsemble::range_violations`].

use std::io::Write;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Minimum number of post-burn-in samples accepted by [`calibrate`].
pub const MIN_CALIBRATION_SAMPLES: usize = 30;

/// Paths per work unit in [`ensemble_moments`]; fixed so the reduction order,
/// and therefore the result, does not depend on scheduling.
const BLOCK_PATHS: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OuParams {
    pub theta: f64,
    pub mu: f64,
    pub sigma: f64,
    pub p0: f64,
}

impl OuParams {
    pub fn new(theta: f64, mu: f64, sigma: f64, p0: f64) -> Result<Self> {
        let p = Self { theta, mu, sigma, p0 };
        p.validate()?;
        Ok(p)
    }

    /// Parameters fitted to the running probability of pocket 9 over the
    /// reference in-sample window.
    pub fn reference() -> Self {
        Self {
            theta: 0.0022,
            mu: 0.0317,
            sigma: 0.00010,
            p0: 0.048,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParams(m));
        if !(self.theta > 0.0 && self.theta.is_finite()) {
            return bad(format!("theta must be positive, got {}", self.theta));
        }
        if !(self.sigma >= 0.0 && self.sigma.is_finite()) {
            return bad(format!("sigma must be non-negative, got {}", self.sigma));
        }
        if !(0.0..=1.0).contains(&self.mu) {
            return bad(format!("mu must be a probability, got {}", self.mu));
        }
        if !(0.0..=1.0).contains(&self.p0) {
            return bad(format!("p0 must be a probability, got {}", self.p0));
        }
        Ok(())
    }

    /// Stationary standard deviation `sigma / sqrt(2 theta)`.
    pub fn stationary_stdev(&self) -> f64 {
        self.sigma / (2.0 * self.theta).sqrt()
    }

    pub fn half_life(&self) -> f64 {
        std::f64::consts::LN_2 / self.theta
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    #[default]
    Exact,
    EulerMaruyama,
}

/// `(1 - e^{-2 theta t}) / (2 theta)`, tending to `t` as theta goes to 0.
fn variance_factor(theta: f64, t: f64) -> f64 {
    let x = 2.0 * theta * t;
    if x == 0.0 {
        t
    } else {
        -(-x).exp_m1() / (2.0 * theta)
    }
}

/// Closed-form mean and variance of `P(t)` given `P(0) = p0`.
pub fn moments(params: &OuParams, t: f64) -> (f64, f64) {
    let mean = params.mu + (params.p0 - params.mu) * (-params.theta * t).exp();
    let var = params.sigma * params.sigma * variance_factor(params.theta, t);
    (mean, var)
}

#[derive(Debug, Clone, Copy)]
struct Stepper {
    mu: f64,
    decay: f64,
    noise_sd: f64,
    scheme: Scheme,
    theta_dt: f64,
}

impl Stepper {
    fn new(params: &OuParams, dt: f64, scheme: Scheme) -> Self {
        let noise_sd = match scheme {
            Scheme::Exact => params.sigma * variance_factor(params.theta, dt).sqrt(),
            Scheme::EulerMaruyama => params.sigma * dt.sqrt(),
        };
        Self {
            mu: params.mu,
            decay: (-params.theta * dt).exp(),
            noise_sd,
            scheme,
            theta_dt: params.theta * dt,
        }
    }

    #[inline]
    fn step(&self, p: f64, z: f64) -> f64 {
        match self.scheme {
            Scheme::Exact => self.mu + (p - self.mu) * self.decay + self.noise_sd * z,
            Scheme::EulerMaruyama => p - self.theta_dt * (p - self.mu) + self.noise_sd * z,
        }
    }

    fn fill_path(&self, p0: f64, seed: u64, path_id: u64, out: &mut [f64]) {
        let mut rng = path_rng(seed, path_id);
        let mut p = p0;
        for v in out.iter_mut() {
            let z: f64 = StandardNormal.sample(&mut rng);
            p = self.step(p, z);
            *v = p;
        }
    }
}

fn path_rng(seed: u64, path_id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(path_id);
    rng
}

fn check_sim_args(params: &OuParams, n_steps: usize, n_paths: usize, dt: f64) -> Result<()> {
    params.validate()?;
    if n_steps == 0 || n_paths == 0 {
        return Err(Error::InvalidParams("n_steps and n_paths must be at least 1".into()));
    }
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::InvalidParams(format!("dt must be positive, got {dt}")));
    }
    Ok(())
}

/// Simulated paths, row-major `n_paths x n_steps`. Column `k - 1` holds the
/// value at time `k * dt`; the start value `p0` is not stored.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OuEnsemble {
    pub params: OuParams,
    pub n_paths: usize,
    pub n_steps: usize,
    pub dt: f64,
    pub seed: u64,
    pub scheme: Scheme,
    values: Vec<f64>,
}

impl OuEnsemble {
    pub fn path(&self, j: usize) -> &[f64] {
        &self.values[j * self.n_steps..(j + 1) * self.n_steps]
    }

    pub fn paths(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks(self.n_steps)
    }

    /// Values of every path at step `k` (1-based, time `k * dt`).
    pub fn step_values(&self, k: usize) -> impl Iterator<Item = f64> + '_ {
        assert!(k >= 1 && k <= self.n_steps, "step {k} out of range");
        self.paths().map(move |p| p[k - 1])
    }

    pub fn step_mean(&self, k: usize) -> f64 {
        self.step_values(k).sum::<f64>() / self.n_paths as f64
    }

    /// Unbiased sample variance across paths at step `k`.
    pub fn step_variance(&self, k: usize) -> f64 {
        if self.n_paths < 2 {
            return 0.0;
        }
        let m = self.step_mean(k);
        self.step_values(k).map(|v| (v - m).powi(2)).sum::<f64>() / (self.n_paths - 1) as f64
    }

    /// Number of simulated values outside `[0, 1]`.
    pub fn range_violations(&self) -> usize {
        self.values.iter().filter(|v| !(0.0..=1.0).contains(*v)).count()
    }

    /// Writes `step,path_id,value` rows.
    pub fn write_csv<W: Write>(&self, out: W) -> std::io::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["step", "path_id", "value"])?;
        for (j, path) in self.paths().enumerate() {
            for (k, v) in path.iter().enumerate() {
                w.write_record([(k + 1).to_string(), j.to_string(), v.to_string()])?;
            }
        }
        w.flush()
    }
}

pub fn simulate(
    params: &OuParams,
    n_steps: usize,
    n_paths: usize,
    dt: f64,
    seed: u64,
) -> Result<OuEnsemble> {
    simulate_with(params, n_steps, n_paths, dt, seed, Scheme::Exact)
}

pub fn simulate_with(
    params: &OuParams,
    n_steps: usize,
    n_paths: usize,
    dt: f64,
    seed: u64,
    scheme: Scheme,
) -> Result<OuEnsemble> {
    check_sim_args(params, n_steps, n_paths, dt)?;
    let stepper = Stepper::new(params, dt, scheme);
    let mut values = vec![0.0; n_steps * n_paths];
    values
        .par_chunks_mut(n_steps)
        .enumerate()
        .for_each(|(j, row)| stepper.fill_path(params.p0, seed, j as u64, row));
    Ok(OuEnsemble {
        params: *params,
        n_paths,
        n_steps,
        dt,
        seed,
        scheme,
        values,
    })
}

/// Cross-path mean and unbiased variance at one step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepMoments {
    pub step: usize,
    pub mean: f64,
    pub variance: f64,
}

#[derive(Clone)]
struct Welford {
    n: f64,
    mean: Vec<f64>,
    m2: Vec<f64>,
}

impl Welford {
    fn new(len: usize) -> Self {
        Self {
            n: 0.0,
            mean: vec![0.0; len],
            m2: vec![0.0; len],
        }
    }

    fn push(&mut self, row: &[f64]) {
        self.n += 1.0;
        for ((m, s), &x) in self.mean.iter_mut().zip(self.m2.iter_mut()).zip(row) {
            let d = x - *m;
            *m += d / self.n;
            *s += d * (x - *m);
        }
    }

    fn merge(&mut self, other: &Welford) {
        let n = self.n + other.n;
        for k in 0..self.mean.len() {
            let d = other.mean[k] - self.mean[k];
            self.mean[k] += d * other.n / n;
            self.m2[k] += other.m2[k] + d * d * self.n * other.n / n;
        }
        self.n = n;
    }
}

/// Per-step ensemble moments without storing the paths. Uses the same
/// per-path streams as [`simulate_with`], so for equal arguments the result
/// agrees with the stored ensemble up to summation order.
pub fn ensemble_moments(
    params: &OuParams,
    n_steps: usize,
    n_paths: usize,
    dt: f64,
    seed: u64,
    scheme: Scheme,
) -> Result<Vec<StepMoments>> {
    check_sim_args(params, n_steps, n_paths, dt)?;
    let stepper = Stepper::new(params, dt, scheme);
    let n_blocks = n_paths.div_ceil(BLOCK_PATHS);
    let blocks: Vec<Welford> = (0..n_blocks)
        .into_par_iter()
        .map(|b| {
            let mut acc = Welford::new(n_steps);
            let mut row = vec![0.0; n_steps];
            let end = ((b + 1) * BLOCK_PATHS).min(n_paths);
            for j in b * BLOCK_PATHS..end {
                stepper.fill_path(params.p0, seed, j as u64, &mut row);
                acc.push(&row);
            }
            acc
        })
        .collect();
    let mut total = blocks[0].clone();
    for b in &blocks[1..] {
        total.merge(b);
    }
    let denom = (total.n - 1.0).max(1.0);
    Ok((0..n_steps)
        .map(|k| StepMoments {
            step: k + 1,
            mean: total.mean[k],
            variance: total.m2[k] / denom,
        })
        .collect())
}

/// Ordinary least squares fit of `x[k+1] = intercept + slope * x[k] + e`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Ar1Fit {
    pub slope: f64,
    pub intercept: f64,
    /// Residual standard deviation with `n - 2` degrees of freedom.
    pub residual_sd: f64,
    pub n: usize,
}

pub fn fit_ar1(values: &[f64]) -> Result<Ar1Fit> {
    if values.len() < 3 {
        return Err(Error::InvalidParams("AR(1) fit needs at least 3 values".into()));
    }
    let x = &values[..values.len() - 1];
    let y = &values[1..];
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxx, mut sxy) = (0.0, 0.0);
    for (&a, &b) in x.iter().zip(y) {
        sxx += (a - mx) * (a - mx);
        sxy += (a - mx) * (b - my);
    }
    if sxx == 0.0 {
        return Err(Error::NonStationary { slope: f64::NAN });
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = x
        .iter()
        .zip(y)
        .map(|(&a, &b)| (b - intercept - slope * a).powi(2))
        .sum();
    Ok(Ar1Fit {
        slope,
        intercept,
        residual_sd: (sse / (n - 2.0)).sqrt(),
        n: x.len(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OuFit {
    pub params: OuParams,
    pub ar1: Ar1Fit,
    pub dt: f64,
    pub burn_in: usize,
}

/// Fits OU parameters to a sampled path by mapping an AR(1) regression onto
/// the exact transition: `theta = -ln(a)/dt`, `mu = c/(1-a)`,
/// `sigma = s sqrt(-2 ln(a) / (dt (1 - a^2)))`. `p0` is the first value after
/// the burn-in.
pub fn calibrate(values: &[f64], dt: f64, burn_in: usize) -> Result<OuFit> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::InvalidParams(format!("dt must be positive, got {dt}")));
    }
    if values.len() < burn_in + MIN_CALIBRATION_SAMPLES {
        return Err(Error::BurnInTooLarge {
            burn_in,
            len: values.len(),
        });
    }
    let sample = &values[burn_in..];
    let ar1 = fit_ar1(sample)?;
    let a = ar1.slope;
    if !(a > 0.0 && a < 1.0) {
        return Err(Error::NonStationary { slope: a });
    }
    let ln_a = a.ln();
    let params = OuParams {
        theta: -ln_a / dt,
        mu: ar1.intercept / (1.0 - a),
        sigma: ar1.residual_sd * (-2.0 * ln_a / (dt * (1.0 - a * a))).sqrt(),
        p0: sample[0],
    };
    Ok(OuFit {
        params,
        ar1,
        dt,
        burn_in,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn reference() -> OuParams {
        OuParams::reference()
    }

    #[test]
    fn moments_limits() {
        let p = reference();
        assert_eq!(moments(&p, 0.0), (p.p0, 0.0));
        let (m, v) = moments(&p, f64::INFINITY);
        assert_eq!(m, p.mu);
        assert!((v - p.sigma * p.sigma / (2.0 * p.theta)).abs() < 1e-24);
    }

    #[test]
    fn noise_free_path_is_exact_solution() {
        let p = OuParams { sigma: 0.0, ..reference() };
        let e = simulate(&p, 5000, 3, 1.0, 1).unwrap();
        for path in e.paths() {
            for (k, &v) in path.iter().enumerate() {
                let t = (k + 1) as f64;
                let exact = p.mu + (p.p0 - p.mu) * (-p.theta * t).exp();
                assert!((v - exact).abs() < 1e-12, "step {} {v} {exact}", k + 1);
            }
        }
    }

    #[test]
    fn vanishing_theta_holds_p0() {
        let p = OuParams { theta: 1e-300, sigma: 0.0, ..reference() };
        let e = simulate(&p, 100, 1, 1.0, 0).unwrap();
        assert!(e.path(0).iter().all(|&v| v == p.p0));
        assert_eq!(variance_factor(1e-300, 2.5), 2.5);
        assert_eq!(variance_factor(0.0, 2.5), 2.5);
    }

    #[test]
    fn one_step_transition_matches_moments() {
        let p = reference();
        for dt in [0.1, 1.0, 7.0] {
            let s = Stepper::new(&p, dt, Scheme::Exact);
            let (m, v) = moments(&p, dt);
            assert!((s.step(p.p0, 0.0) - m).abs() < 1e-12);
            assert!((s.noise_sd * s.noise_sd - v).abs() < 1e-12);
        }
    }

    #[test]
    fn invalid_params() {
        assert!(OuParams::new(0.0, 0.03, 0.001, 0.03).is_err());
        assert!(OuParams::new(0.1, 1.2, 0.001, 0.03).is_err());
        assert!(OuParams::new(0.1, 0.03, -1.0, 0.03).is_err());
        assert!(simulate(&reference(), 0, 1, 1.0, 0).is_err());
        assert!(simulate(&reference(), 1, 1, 0.0, 0).is_err());
    }

    #[test]
    fn seed_deterministic_and_order_independent() {
        let p = reference();
        let a = simulate(&p, 200, 16, 1.0, 99).unwrap();
        let b = simulate(&p, 200, 16, 1.0, 99).unwrap();
        assert_eq!(a, b);
        // path 5 alone, computed outside the ensemble
        let s = Stepper::new(&p, 1.0, Scheme::Exact);
        let mut row = vec![0.0; 200];
        s.fill_path(p.p0, 99, 5, &mut row);
        assert_eq!(a.path(5), &row[..]);
        // more paths does not disturb existing ones
        let c = simulate(&p, 200, 32, 1.0, 99).unwrap();
        assert_eq!(c.path(15), a.path(15));
    }

    #[test]
    fn streaming_moments_agree_with_stored_ensemble() {
        let p = reference();
        let e = simulate(&p, 300, 200, 1.0, 3).unwrap();
        let m = ensemble_moments(&p, 300, 200, 1.0, 3, Scheme::Exact).unwrap();
        for k in [1, 50, 300] {
            assert!((m[k - 1].mean - e.step_mean(k)).abs() < 1e-14);
            let v = e.step_variance(k);
            assert!((m[k - 1].variance - v).abs() < 1e-9 * v);
        }
    }

    #[test]
    fn euler_close_to_exact_for_small_steps() {
        let p = OuParams { sigma: 0.0, ..reference() };
        let e = simulate_with(&p, 1000, 1, 0.01, 0, Scheme::EulerMaruyama).unwrap();
        let (m, _) = moments(&p, 10.0);
        assert!((e.path(0)[999] - m).abs() < 1e-6);
    }

    #[test]
    fn ensemble_mean_at_horizon() {
        let p = reference();
        let e = simulate(&p, 5000, 1000, 1.0, 2016).unwrap();
        let (m, _) = moments(&p, 5000.0);
        assert!((m - 0.0317).abs() < 1e-5);
        let se = (e.step_variance(5000) / 1000.0).sqrt();
        assert!((e.step_mean(5000) - m).abs() < 3.0 * se);
        assert_eq!(e.range_violations(), 0);
    }

    #[test]
    fn ar1_recovers_linear_recursion() {
        // x[k+1] = 0.01 + 0.6 x[k], no noise after a nonzero start
        let mut v = vec![0.5];
        for _ in 0..50 {
            let last = *v.last().unwrap();
            v.push(0.01 + 0.6 * last);
        }
        let f = fit_ar1(&v).unwrap();
        assert!((f.slope - 0.6).abs() < 1e-9);
        assert!((f.intercept - 0.01).abs() < 1e-9);
    }

    #[test]
    fn calibrate_constant_path() {
        let r = calibrate(&[0.03; 100], 1.0, 0);
        assert!(matches!(r, Err(Error::NonStationary { .. })));
    }

    #[test]
    fn calibrate_white_noise() {
        use rand::Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let v: Vec<f64> = (0..5000).map(|_| 0.03 + 0.001 * (rng.random::<f64>() - 0.5)).collect();
        let f = fit_ar1(&v).unwrap();
        assert!(f.slope.abs() < 0.05, "{}", f.slope);
        assert!((f.intercept / (1.0 - f.slope) - 0.03).abs() < 1e-4);
        match calibrate(&v, 1.0, 0) {
            Ok(fit) => assert!(fit.params.theta > 2.0),
            Err(Error::NonStationary { slope }) => assert!(slope <= 0.0),
            Err(e) => panic!("{e}"),
        }
    }

    #[test]
    fn calibrate_needs_samples() {
        assert!(matches!(
            calibrate(&[0.1; 40], 1.0, 20),
            Err(Error::BurnInTooLarge { .. })
        ));
    }

    #[test]
    fn calibrate_round_trip() {
        let p = reference();
        let e = simulate(&p, 5000, 1, 1.0, 31).unwrap();
        let fit = calibrate(e.path(0), 1.0, 0).unwrap().params;
        assert!((fit.mu - p.mu).abs() / p.mu < 0.10, "{fit:?}");
        assert!((fit.theta - p.theta).abs() / p.theta < 0.30, "{fit:?}");
        assert!((fit.sigma - p.sigma).abs() / p.sigma < 0.30, "{fit:?}");
    }
}

//! Path-level Monte Carlo estimates of the quantities the transform pipeline computes.
//!
//! Prices are simulated under the risk-neutral measure in normalized log-price
//! coordinates `W*(u) = log(S_u/S)/σ`, which drift at `ϖ`; the transform
//! estimators simulate driftless `W*` directly.
//!
//! Every path owns a random stream derived from `(seed, path index)`. Paths are
//! grouped into fixed chunks whose moments are merged in a fixed order, so a
//! result depends only on the seed and the configuration, not on thread count.

pub mod clock;
pub mod stats;

use num_complex::Complex64;
use rayon::prelude::*;

pub use clock::{clock_registry, ClockOutcome, ClockRegistry, ClockSetup, ExcursionClock, PathRng};
pub use stats::{ks_distance, Moments};

use crate::error::{Error, Result};
use crate::model::{derive_params, MarketParams, ParisianContract};
use crate::transforms::ExcursionSpec;

/// Samples per reduction chunk.
const CHUNK: usize = 1024;

/// Smallest `horizon · Re z` accepted by the transform estimators; truncation
/// bias is below `e^{−20}`.
pub const MIN_HORIZON_DECAY: f64 = 20.0;

#[derive(Debug, Clone, PartialEq)]
pub struct PathConfig {
    pub paths: usize,
    /// Inverse of the largest simulation time step.
    pub steps_per_unit_time: usize,
    pub seed: u64,
    /// Pair every path with its sign-flipped twin.
    pub antithetic: bool,
    /// Clock scheme; see [`clock_registry`].
    pub scheme: String,
}

impl Default for PathConfig {
    fn default() -> Self {
        Self {
            paths: 100_000,
            steps_per_unit_time: 1000,
            seed: 42,
            antithetic: false,
            scheme: "bridge".to_string(),
        }
    }
}

impl PathConfig {
    pub fn validate(&self) -> Result<()> {
        if self.paths < 100 {
            return Err(Error::config(format!("mc.paths must be >= 100, got {}", self.paths)));
        }
        if self.steps_per_unit_time < 100 {
            return Err(Error::config(format!(
                "mc.steps_per_unit_time must be >= 100, got {}",
                self.steps_per_unit_time
            )));
        }
        clock_registry().get(&self.scheme)?;
        Ok(())
    }

    pub fn step(&self) -> f64 {
        1.0 / self.steps_per_unit_time as f64
    }

    /// Independent samples: antithetic pairs count once.
    fn samples(&self) -> usize {
        if self.antithetic {
            self.paths.div_ceil(2)
        } else {
            self.paths
        }
    }
}

/// Mean and standard error of a real Monte Carlo estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub paths: usize,
    pub seed: u64,
}

impl McEstimate {
    /// `(value − mean)/std_error`.
    pub fn z_score(&self, value: f64) -> f64 {
        score(value - self.mean, self.std_error)
    }
}

/// Complex estimate with componentwise standard errors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McComplexEstimate {
    pub mean: Complex64,
    pub std_error: Complex64,
    pub paths: usize,
    pub seed: u64,
    /// Bound on the contribution of paths beyond the horizon, `e^{−Re z · horizon}`.
    pub truncation_bound: f64,
}

impl McComplexEstimate {
    /// Componentwise z-scores of `value`.
    /// A component without sampling noise scores 0 on exact agreement and ±inf otherwise.
    pub fn z_scores(&self, value: Complex64) -> (f64, f64) {
        let d = value - self.mean;
        (score(d.re, self.std_error.re), score(d.im, self.std_error.im))
    }
}

fn score(diff: f64, se: f64) -> f64 {
    if se > 0.0 {
        diff / se
    } else if diff.abs() <= 1e-12 {
        0.0
    } else {
        diff.signum() * f64::INFINITY
    }
}

/// Runs `sample` over all paths and returns the moments of its `outputs` values.
fn simulate<F>(config: &PathConfig, outputs: usize, sample: F) -> Moments
where
    F: Fn(&mut PathRng, &mut [f64]) + Sync,
{
    let n = config.samples();
    let chunks: Vec<Moments> = (0..n.div_ceil(CHUNK))
        .into_par_iter()
        .map(|c| {
            let mut m = Moments::new(outputs);
            let mut a = vec![0.0; outputs];
            let mut b = vec![0.0; outputs];
            for i in c * CHUNK..((c + 1) * CHUNK).min(n) {
                a.fill(0.0);
                sample(&mut PathRng::new(config.seed, i as u64, false), &mut a);
                if config.antithetic {
                    b.fill(0.0);
                    sample(&mut PathRng::new(config.seed, i as u64, true), &mut b);
                    for (x, y) in a.iter_mut().zip(&b) {
                        *x = 0.5 * (*x + *y);
                    }
                }
                m.push(&a);
            }
            m
        })
        .collect();
    Moments::reduce(chunks, outputs)
}

fn real_estimate(m: &Moments, i: usize, config: &PathConfig) -> McEstimate {
    McEstimate {
        mean: m.mean[i],
        std_error: m.std_error(i),
        paths: config.paths,
        seed: config.seed,
    }
}

fn complex_estimate(m: &Moments, i: usize, config: &PathConfig, truncation_bound: f64) -> McComplexEstimate {
    McComplexEstimate {
        mean: Complex64::new(m.mean[2 * i], m.mean[2 * i + 1]),
        std_error: Complex64::new(m.std_error(2 * i), m.std_error(2 * i + 1)),
        paths: config.paths,
        seed: config.seed,
        truncation_bound,
    }
}

/// Result of one simulated price path.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathRecord {
    pub knocked_in: bool,
    pub terminal_spot: f64,
}

/// The price paths of a contract, generated lazily in index order.
pub struct KnockInPaths {
    clock: std::sync::Arc<dyn ExcursionClock>,
    setup: ClockSetup,
    spot: f64,
    sigma: f64,
    seed: u64,
    antithetic: bool,
    next: usize,
    total: usize,
}

fn price_path(clock: &dyn ExcursionClock, setup: &ClockSetup, rng: &mut PathRng) -> (bool, f64) {
    match clock.run(setup, rng) {
        ClockOutcome::KnockedIn { time, position } => {
            let rest = setup.horizon - time;
            (true, position + setup.drift * rest + rest.sqrt() * rng.normal())
        }
        ClockOutcome::Survived { position } => (false, position),
    }
}

impl Iterator for KnockInPaths {
    type Item = PathRecord;

    fn next(&mut self) -> Option<PathRecord> {
        if self.next >= self.total {
            return None;
        }
        let k = self.next;
        self.next += 1;
        let (index, twin) = if self.antithetic { (k / 2, k % 2 == 1) } else { (k, false) };
        let mut rng = PathRng::new(self.seed, index as u64, twin);
        let (knocked_in, x) = price_path(self.clock.as_ref(), &self.setup, &mut rng);
        Some(PathRecord {
            knocked_in,
            terminal_spot: self.spot * (self.sigma * x).exp(),
        })
    }
}

fn price_setup(market: &MarketParams, contract: &ParisianContract, config: &PathConfig) -> Result<ClockSetup> {
    let p = derive_params(market, contract)?;
    config.validate()?;
    Ok(ClockSetup {
        b: p.b,
        window: p.window,
        initial_age: contract.elapsed_age,
        drift: p.varpi,
        horizon: p.tau,
        max_step: config.step(),
        track_terminal: true,
    })
}

/// Risk-neutral price paths with their knock-in flags. Resetting happens when
/// the price is at or above the barrier.
pub fn simulate_knock_in(market: &MarketParams, contract: &ParisianContract, config: &PathConfig) -> Result<KnockInPaths> {
    let setup = price_setup(market, contract, config)?;
    Ok(KnockInPaths {
        clock: clock_registry().get(&config.scheme)?,
        setup,
        spot: market.spot,
        sigma: market.volatility,
        seed: config.seed,
        antithetic: config.antithetic,
        next: 0,
        total: config.paths,
    })
}

/// Down-and-in call price and knock-in frequency.
pub fn mc_price_with_frequency(
    market: &MarketParams,
    contract: &ParisianContract,
    config: &PathConfig,
) -> Result<(McEstimate, McEstimate)> {
    let setup = price_setup(market, contract, config)?;
    let clock = clock_registry().get(&config.scheme)?;
    let discount = (-market.rate * contract.time_to_maturity).exp();
    let m = simulate(config, 2, |rng, out| {
        let (knocked, x) = price_path(clock.as_ref(), &setup, rng);
        if knocked {
            let s = market.spot * (market.volatility * x).exp();
            out[0] = discount * (s - contract.strike).max(0.0);
            out[1] = 1.0;
        }
    });
    Ok((real_estimate(&m, 0, config), real_estimate(&m, 1, config)))
}

/// Down-and-in call price `E[e^{−rτ}(S_τ − K)⁺ 1{knocked in}]`.
pub fn mc_price(market: &MarketParams, contract: &ParisianContract, config: &PathConfig) -> Result<McEstimate> {
    Ok(mc_price_with_frequency(market, contract, config)?.0)
}

fn excursion_setup(spec: &ExcursionSpec, config: &PathConfig, horizon: f64) -> ClockSetup {
    ClockSetup {
        b: spec.b,
        window: spec.window,
        initial_age: spec.elapsed(),
        drift: 0.0,
        horizon,
        max_step: config.step(),
        track_terminal: false,
    }
}

fn horizon_for(zs: &[Complex64], horizon: Option<f64>) -> Result<f64> {
    if zs.is_empty() {
        return Err(Error::config("no transform arguments given"));
    }
    for z in zs {
        if !(z.re > 0.0) {
            return Err(Error::domain(format!("transform estimates need Re z > 0, got {z}")));
        }
    }
    let slowest = zs.iter().map(|z| z.re).fold(f64::INFINITY, f64::min);
    let horizon = horizon.unwrap_or(2.0 * MIN_HORIZON_DECAY / slowest);
    if !(horizon * slowest >= MIN_HORIZON_DECAY) {
        return Err(Error::config(format!(
            "simulation horizon {horizon} is too short for Re z = {slowest}: need horizon·Re z >= {MIN_HORIZON_DECAY}"
        )));
    }
    Ok(horizon)
}

/// Estimates `E[e^{−zH} g_z(W*(H))]` for each `z`, with `H` truncated at the horizon.
fn knock_in_functional<G>(
    spec: &ExcursionSpec,
    zs: &[Complex64],
    config: &PathConfig,
    horizon: Option<f64>,
    g: G,
) -> Result<Vec<McComplexEstimate>>
where
    G: Fn(Complex64, f64) -> Complex64 + Sync,
{
    config.validate()?;
    let horizon = horizon_for(zs, horizon)?;
    let setup = excursion_setup(spec, config, horizon);
    let clock = clock_registry().get(&config.scheme)?;
    let m = simulate(config, 2 * zs.len(), |rng, out| {
        if let ClockOutcome::KnockedIn { time, position } = clock.run(&setup, rng) {
            for (i, z) in zs.iter().enumerate() {
                let v = (-z * time).exp() * g(*z, position);
                out[2 * i] = v.re;
                out[2 * i + 1] = v.im;
            }
        }
    });
    Ok(zs
        .iter()
        .enumerate()
        .map(|(i, z)| complex_estimate(&m, i, config, (-z.re * horizon).exp()))
        .collect())
}

/// `E[e^{−zH}]` for several `z` from one set of paths. The horizon defaults to `40/min Re z`.
pub fn mc_exit_time_transforms(
    spec: &ExcursionSpec,
    zs: &[Complex64],
    config: &PathConfig,
    horizon: Option<f64>,
) -> Result<Vec<McComplexEstimate>> {
    knock_in_functional(spec, zs, config, horizon, |_, _| Complex64::new(1.0, 0.0))
}

pub fn mc_exit_time_transform(
    spec: &ExcursionSpec,
    z: Complex64,
    config: &PathConfig,
    horizon: Option<f64>,
) -> Result<McComplexEstimate> {
    Ok(mc_exit_time_transforms(spec, &[z], config, horizon)?[0])
}

/// `E[e^{−zH}·e^{−|W*(H) − y|√(2z)}/√(2z)]`, the transform of the knock-in density at `y`, for several `z`.
pub fn mc_hb_lemma_estimates(
    spec: &ExcursionSpec,
    y: f64,
    zs: &[Complex64],
    config: &PathConfig,
    horizon: Option<f64>,
) -> Result<Vec<McComplexEstimate>> {
    knock_in_functional(spec, zs, config, horizon, move |z, x| {
        let k = (2.0 * z).sqrt();
        (-(x - y).abs() * k).exp() / k
    })
}

pub fn mc_hb_lemma_estimate(
    spec: &ExcursionSpec,
    y: f64,
    z: Complex64,
    config: &PathConfig,
    horizon: Option<f64>,
) -> Result<McComplexEstimate> {
    Ok(mc_hb_lemma_estimates(spec, y, &[z], config, horizon)?[0])
}

/// Frequency of `{H < u}`.
pub fn mc_knock_in_frequency(spec: &ExcursionSpec, u: f64, config: &PathConfig) -> Result<McEstimate> {
    config.validate()?;
    if !(u > 0.0 && u.is_finite()) {
        return Err(Error::domain(format!("knock-in frequency needs a finite time > 0, got {u}")));
    }
    let setup = excursion_setup(spec, config, u);
    let clock = clock_registry().get(&config.scheme)?;
    let m = simulate(config, 1, |rng, out| {
        if matches!(clock.run(&setup, rng), ClockOutcome::KnockedIn { .. }) {
            out[0] = 1.0;
        }
    });
    Ok(real_estimate(&m, 0, config))
}

/// Knock-in positions `W*(H)`, one per path, in path order. Paths are run
/// without a horizon.
pub fn mc_knock_in_positions(spec: &ExcursionSpec, config: &PathConfig) -> Result<Vec<f64>> {
    config.validate()?;
    let setup = excursion_setup(spec, config, f64::INFINITY);
    let clock = clock_registry().get(&config.scheme)?;
    let n = config.paths;
    Ok((0..n)
        .into_par_iter()
        .map(|i| {
            let (index, twin) = if config.antithetic { (i / 2, i % 2 == 1) } else { (i, false) };
            match clock.run(&setup, &mut PathRng::new(config.seed, index as u64, twin)) {
                ClockOutcome::KnockedIn { position, .. } => position,
                ClockOutcome::Survived { .. } => f64::NAN,
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(paths: usize) -> PathConfig {
        PathConfig {
            paths,
            ..PathConfig::default()
        }
    }

    #[test]
    fn config_invariants() {
        assert!(small(99).validate().is_err());
        assert!(PathConfig {
            steps_per_unit_time: 50,
            ..PathConfig::default()
        }
        .validate()
        .is_err());
        assert!(PathConfig {
            scheme: "nope".into(),
            ..PathConfig::default()
        }
        .validate()
        .is_err());
        assert!(PathConfig::default().validate().is_ok());
    }

    #[test]
    fn horizon_precondition() {
        let spec = ExcursionSpec::fresh(0.0, 0.1).unwrap();
        let err = mc_exit_time_transform(&spec, Complex64::new(1.0, 0.0), &small(100), Some(5.0)).unwrap_err();
        assert!(matches!(err, Error::Config(_)));
        assert!(mc_exit_time_transform(&spec, Complex64::new(-1.0, 0.0), &small(100), None).is_err());
    }

    #[test]
    fn large_z_sees_the_minimum_delay() {
        let spec = ExcursionSpec::fresh(0.0, 0.1).unwrap();
        let e = mc_exit_time_transform(&spec, Complex64::new(200.0, 0.0), &small(2000), None).unwrap();
        assert!(e.mean.re <= (-200.0f64 * 0.1).exp() + 1e-15);
        assert_eq!(e.mean.im, 0.0);
    }

    #[test]
    fn seeds_reproduce_bit_identical_results() {
        let spec = ExcursionSpec::fresh(-0.1, 0.1).unwrap();
        let cfg = PathConfig {
            paths: 3000,
            antithetic: true,
            ..PathConfig::default()
        };
        let z = [Complex64::new(1.0, 0.5)];
        let a = mc_exit_time_transforms(&spec, &z, &cfg, None).unwrap();
        let b = mc_exit_time_transforms(&spec, &z, &cfg, None).unwrap();
        assert_eq!(a, b);
        let c = mc_exit_time_transforms(&spec, &z, &PathConfig { seed: 43, ..cfg }, None).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn path_stream_matches_the_price_estimator() {
        let market = MarketParams {
            spot: 100.0,
            rate: 0.05,
            dividend: 0.0,
            volatility: 0.2,
        };
        let contract = ParisianContract {
            strike: 100.0,
            barrier: 95.0,
            window: 0.05,
            time_to_maturity: 0.5,
            elapsed_age: 0.0,
        };
        let cfg = PathConfig {
            paths: 500,
            steps_per_unit_time: 200,
            ..PathConfig::default()
        };
        let discount = (-0.05f64 * 0.5).exp();
        let records: Vec<PathRecord> = simulate_knock_in(&market, &contract, &cfg).unwrap().collect();
        assert_eq!(records.len(), 500);
        let mean = records
            .iter()
            .map(|r| if r.knocked_in { discount * (r.terminal_spot - 100.0).max(0.0) } else { 0.0 })
            .sum::<f64>()
            / 500.0;
        let est = mc_price(&market, &contract, &cfg).unwrap();
        assert!((mean - est.mean).abs() < 1e-10, "{mean} vs {}", est.mean);
    }
}

//! Simulation of the excursion clock: the time a normalized log-price path needs
//! to complete one uninterrupted stay of length `D` below `b`.

use std::sync::{Arc, OnceLock};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

/// Independent random stream of one path, derived from `(seed, index)`.
/// The antithetic twin negates every normal draw.
pub struct PathRng {
    rng: ChaCha8Rng,
    sign: f64,
}

impl PathRng {
    pub fn new(seed: u64, index: u64, antithetic_twin: bool) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(index);
        Self {
            rng,
            sign: if antithetic_twin { -1.0 } else { 1.0 },
        }
    }

    #[inline]
    pub fn normal(&mut self) -> f64 {
        let z: f64 = self.rng.sample(StandardNormal);
        self.sign * z
    }

    /// Uniform on `(0, 1]`.
    #[inline]
    pub fn uniform(&mut self) -> f64 {
        1.0 - self.rng.random::<f64>()
    }
}

/// One clock problem in normalized coordinates, starting from `W = 0` at time 0.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClockSetup {
    pub b: f64,
    pub window: f64,
    /// Age of the running excursion at time 0; ignored unless `b > 0`.
    pub initial_age: f64,
    pub drift: f64,
    /// Simulation stops here; may be infinite.
    pub horizon: f64,
    /// Largest time step.
    pub max_step: f64,
    /// Whether the position at the horizon is needed for paths that never knock in.
    pub track_terminal: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ClockOutcome {
    KnockedIn { time: f64, position: f64 },
    /// No knock-in by the horizon; position there (NaN when not tracked).
    Survived { position: f64 },
}

/// A simulation scheme for the excursion clock.
pub trait ExcursionClock: Send + Sync {
    fn name(&self) -> &'static str;
    fn run(&self, setup: &ClockSetup, rng: &mut PathRng) -> ClockOutcome;
}

fn unreachable_barrier(setup: &ClockSetup, rng: &mut PathRng) -> ClockOutcome {
    let position = if setup.track_terminal && setup.horizon.is_finite() {
        setup.drift * setup.horizon + setup.horizon.sqrt() * rng.normal()
    } else {
        f64::NAN
    };
    ClockOutcome::Survived { position }
}

/// Fixed grid of width `max_step`: the clock resets whenever the path is at or
/// above `b` at a grid time and otherwise advances by one step.
pub struct DiscreteClock;

impl ExcursionClock for DiscreteClock {
    fn name(&self) -> &'static str {
        "discrete"
    }

    fn run(&self, setup: &ClockSetup, rng: &mut PathRng) -> ClockOutcome {
        let ClockSetup {
            b,
            window,
            drift,
            horizon,
            max_step: h,
            ..
        } = *setup;
        if b == f64::NEG_INFINITY {
            return unreachable_barrier(setup, rng);
        }
        let slack = 1e-9 * h;
        let mut t = 0.0;
        let mut w = 0.0;
        let mut age = if b > 0.0 { setup.initial_age } else { 0.0 };
        while horizon - t > slack {
            let s = h.min(horizon - t);
            w += drift * s + s.sqrt() * rng.normal();
            t += s;
            if w >= b {
                age = 0.0;
            } else {
                age += s;
                if age >= window - slack {
                    return ClockOutcome::KnockedIn { time: t, position: w };
                }
            }
        }
        ClockOutcome::Survived { position: w }
    }
}

/// Exact simulation on an adaptive grid.
///
/// Between grid points the path is a Brownian bridge, whose probability of
/// touching `b` is `exp(−2(b − w)(b − x)/s)`. When a step below the barrier does
/// touch, the clock restarts at the last touch, sampled from the time-reversed
/// bridge: its first passage to `b` is `u·s/(s + u)` with `u` inverse Gaussian.
/// Steps below the barrier never overshoot the remaining excursion time, so a
/// touch-free step of exactly that length completes the excursion. Without drift,
/// stretches above the barrier are skipped with the exact first-passage time.
pub struct BridgeClock;

impl BridgeClock {
    /// Age at the end of a step of length `s` from `w` to `x < b` that touched `b`.
    fn age_after_touch(w: f64, x: f64, b: f64, s: f64, rng: &mut PathRng) -> f64 {
        let ell = b - x;
        let nu = (w - b).abs() / s;
        let u = if nu == 0.0 {
            levy(ell, rng)
        } else {
            inverse_gaussian(ell / nu, ell * ell, rng)
        };
        if u.is_infinite() {
            s
        } else {
            u * s / (s + u)
        }
    }
}

/// First passage time of standard Brownian motion to a level at distance `gap`.
#[inline]
fn levy(gap: f64, rng: &mut PathRng) -> f64 {
    let z = rng.normal();
    gap * gap / (z * z)
}

/// Inverse Gaussian variate (Michael–Schucany–Haas) with the root written
/// without cancellation, so very large means stay accurate.
fn inverse_gaussian(mean: f64, shape: f64, rng: &mut PathRng) -> f64 {
    let y = rng.normal().powi(2);
    let q = mean * y / (2.0 * shape);
    let x = if q == 0.0 {
        mean
    } else {
        // `mean/(1 + q + √(q(2 + q)))`, scaled by `q` so that `mean → ∞` stays finite.
        let r = 1.0 / q;
        (2.0 * shape / y) / (1.0 + r + (1.0 + 2.0 * r).sqrt())
    };
    if rng.uniform() * (mean + x) <= mean {
        x
    } else {
        mean * mean / x
    }
}

impl ExcursionClock for BridgeClock {
    fn name(&self) -> &'static str {
        "bridge"
    }

    fn run(&self, setup: &ClockSetup, rng: &mut PathRng) -> ClockOutcome {
        let ClockSetup {
            b,
            window,
            drift,
            horizon,
            max_step,
            ..
        } = *setup;
        if b == f64::NEG_INFINITY {
            return unreachable_barrier(setup, rng);
        }
        let mut t = 0.0;
        let mut w = 0.0;
        let mut age = if b > 0.0 { setup.initial_age } else { 0.0 };
        loop {
            let remaining = horizon - t;
            if remaining <= 0.0 {
                return ClockOutcome::Survived { position: w };
            }
            if w >= b {
                let gap = w - b;
                if drift == 0.0 && gap > 0.0 {
                    let hit = levy(gap, rng);
                    if hit < remaining {
                        t += hit;
                        w = b;
                        continue;
                    }
                    let position = if setup.track_terminal {
                        killed_position(w, b, remaining, rng)
                    } else {
                        f64::NAN
                    };
                    return ClockOutcome::Survived { position };
                }
                let s = max_step.min(window).min(remaining);
                let x = w + drift * s + s.sqrt() * rng.normal();
                t += s;
                if x < b {
                    age = Self::age_after_touch(w, x, b, s, rng);
                }
                w = x;
            } else {
                let to_go = window - age;
                let s = max_step.min(to_go).min(remaining);
                let completes = s >= to_go;
                let x = w + drift * s + s.sqrt() * rng.normal();
                t += s;
                if x >= b {
                    age = 0.0;
                } else if rng.uniform() <= (-2.0 * (b - w) * (b - x) / s).exp() {
                    age = Self::age_after_touch(w, x, b, s, rng);
                } else if completes {
                    return ClockOutcome::KnockedIn { time: t, position: x };
                } else {
                    age += s;
                }
                w = x;
            }
        }
    }
}

/// Position after time `s` of driftless Brownian motion started at `w > b`,
/// conditioned on not reaching `b`.
fn killed_position(w: f64, b: f64, s: f64, rng: &mut PathRng) -> f64 {
    loop {
        let x = w + s.sqrt() * rng.normal();
        if x > b && rng.uniform() > (-2.0 * (w - b) * (x - b) / s).exp() {
            return x;
        }
    }
}

/// Name → clock scheme table.
pub struct ClockRegistry {
    schemes: Vec<Arc<dyn ExcursionClock>>,
}

impl ClockRegistry {
    pub fn with_defaults() -> Self {
        Self {
            schemes: vec![Arc::new(BridgeClock), Arc::new(DiscreteClock)],
        }
    }

    pub fn register(&mut self, scheme: Arc<dyn ExcursionClock>) {
        self.schemes.retain(|s| s.name() != scheme.name());
        self.schemes.push(scheme);
    }

    pub fn names(&self) -> impl Iterator<Item = &'static str> + '_ {
        self.schemes.iter().map(|s| s.name())
    }

    pub fn get(&self, name: &str) -> Result<Arc<dyn ExcursionClock>> {
        self.schemes.iter().find(|s| s.name() == name).cloned().ok_or_else(|| {
            Error::config(format!(
                "unknown clock scheme `{name}` (known: {})",
                self.names().collect::<Vec<_>>().join(", ")
            ))
        })
    }
}

pub fn clock_registry() -> &'static ClockRegistry {
    static REGISTRY: OnceLock<ClockRegistry> = OnceLock::new();
    REGISTRY.get_or_init(ClockRegistry::with_defaults)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn streams_are_reproducible_and_distinct() {
        let a: Vec<f64> = {
            let mut r = PathRng::new(7, 3, false);
            (0..5).map(|_| r.normal()).collect()
        };
        let b: Vec<f64> = {
            let mut r = PathRng::new(7, 3, false);
            (0..5).map(|_| r.normal()).collect()
        };
        let c: Vec<f64> = {
            let mut r = PathRng::new(7, 4, false);
            (0..5).map(|_| r.normal()).collect()
        };
        let twin: Vec<f64> = {
            let mut r = PathRng::new(7, 3, true);
            (0..5).map(|_| r.normal()).collect()
        };
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert!(a.iter().zip(&twin).all(|(x, y)| *x == -*y));
    }

    #[test]
    fn inverse_gaussian_moments() {
        let mut rng = PathRng::new(1, 0, false);
        let (mean, shape) = (0.7, 2.0);
        let n = 200_000;
        let xs: Vec<f64> = (0..n).map(|_| inverse_gaussian(mean, shape, &mut rng)).collect();
        let m = xs.iter().sum::<f64>() / n as f64;
        let v = xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1) as f64;
        let se = (mean.powi(3) / shape / n as f64).sqrt();
        assert!((m - mean).abs() < 4.0 * se, "{m}");
        assert!((v - mean.powi(3) / shape).abs() < 0.05 * mean.powi(3) / shape, "{v}");
    }

    #[test]
    fn inverse_gaussian_with_huge_mean_tends_to_levy() {
        let mut rng = PathRng::new(2, 0, false);
        for _ in 0..1000 {
            let x = inverse_gaussian(1e300, 0.25, &mut rng);
            assert!(x.is_finite() && x > 0.0);
        }
    }

    #[test]
    fn unreachable_barrier_never_knocks_in() {
        let setup = ClockSetup {
            b: f64::NEG_INFINITY,
            window: 0.1,
            initial_age: 0.0,
            drift: 0.1,
            horizon: 1.0,
            max_step: 1e-3,
            track_terminal: true,
        };
        for scheme in clock_registry().names() {
            let clock = clock_registry().get(scheme).unwrap();
            let mut rng = PathRng::new(3, 0, false);
            assert!(matches!(clock.run(&setup, &mut rng), ClockOutcome::Survived { position } if position.is_finite()));
        }
    }

    #[test]
    fn far_barrier_always_knocks_in_at_the_remaining_time() {
        let setup = ClockSetup {
            b: 50.0,
            window: 0.1,
            initial_age: 0.06,
            drift: 0.0,
            horizon: 1.0,
            max_step: 1e-2,
            track_terminal: true,
        };
        let mut rng = PathRng::new(4, 0, false);
        match BridgeClock.run(&setup, &mut rng) {
            ClockOutcome::KnockedIn { time, .. } => assert!((time - 0.04).abs() < 1e-12),
            other => panic!("{other:?}"),
        }
        match DiscreteClock.run(&setup, &mut rng) {
            ClockOutcome::KnockedIn { time, .. } => assert!((time - 0.04).abs() < 1e-9),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn unknown_scheme_is_a_config_error() {
        assert!(matches!(clock_registry().get("euler"), Err(Error::Config(_))));
    }
}

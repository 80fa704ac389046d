//! Numerical Laplace inversion and the shared quadrature engine.
//!
//! Inversion methods are strategies behind [`LaplaceInverter`], built by name
//! from an [`InverterConfig`] through an [`InverterRegistry`].

pub mod euler;
pub mod quadrature;
pub mod stehfest;

use std::fmt;
use std::sync::OnceLock;

pub use euler::EulerSummation;
pub use quadrature::{integrate, try_integrate, Domain, GaussianDecay, QuadratureResult};
pub use stehfest::GaverStehfest;

use crate::error::{Error, Result};
use crate::special::ComplexValue;
use crate::transforms::TransformEvaluator;

/// A Laplace transform as seen by an inverter.
pub type TransformFn<'a> = dyn Fn(ComplexValue) -> Result<ComplexValue> + 'a;

/// A method recovering `f(u)` from `F(z) = ∫₀^∞ e^{−zt} f(t) dt`.
pub trait LaplaceInverter: Send + Sync {
    fn name(&self) -> &'static str;

    /// Number of transform evaluations per inversion.
    fn nodes(&self) -> usize;

    /// Time scale below which the method cannot separate features near `u`.
    fn resolution(&self, u: f64) -> f64;

    fn invert(&self, transform: &TransformFn<'_>, u: f64) -> Result<f64>;
}

#[derive(Debug, Clone, PartialEq)]
pub struct InverterConfig {
    /// Registered name of the inversion method.
    pub method: String,
    pub terms: usize,
    pub precision_target: f64,
}

impl Default for InverterConfig {
    fn default() -> Self {
        Self {
            method: "euler-summation".to_owned(),
            terms: 40,
            precision_target: 1e-8,
        }
    }
}

impl InverterConfig {
    pub fn gaver_stehfest(terms: usize) -> Self {
        Self {
            method: "gaver-stehfest".to_owned(),
            terms,
            precision_target: 1e-8,
        }
    }

    /// Builds the configured inverter from the default registry, checking its term range.
    pub fn build(&self) -> Result<Box<dyn LaplaceInverter>> {
        registry().build(self)
    }
}

pub type InverterFactory = fn(&InverterConfig) -> Result<Box<dyn LaplaceInverter>>;

/// Name → constructor table for inversion methods.
pub struct InverterRegistry {
    entries: Vec<(&'static str, InverterFactory)>,
}

impl fmt::Debug for InverterRegistry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.names()).finish()
    }
}

impl InverterRegistry {
    pub fn empty() -> Self {
        Self { entries: Vec::new() }
    }

    pub fn with_defaults() -> Self {
        let mut r = Self::empty();
        r.register("euler-summation", |c| Ok(Box::new(EulerSummation::from_config(c)?)));
        r.register("gaver-stehfest", |c| Ok(Box::new(GaverStehfest::from_config(c)?)));
        r
    }

    /// Adds a method, replacing any previous one with the same name.
    pub fn register(&mut self, name: &'static str, factory: InverterFactory) {
        self.entries.retain(|(n, _)| *n != name);
        self.entries.push((name, factory));
    }

    pub fn names(&self) -> impl Iterator<Item = &'static str> + '_ {
        self.entries.iter().map(|(n, _)| *n)
    }

    pub fn build(&self, config: &InverterConfig) -> Result<Box<dyn LaplaceInverter>> {
        let factory = self
            .entries
            .iter()
            .find(|(n, _)| *n == config.method)
            .map(|(_, f)| f)
            .ok_or_else(|| {
                Error::config(format!(
                    "unknown inversion method `{}` (known: {})",
                    config.method,
                    self.names().collect::<Vec<_>>().join(", ")
                ))
            })?;
        factory(config)
    }
}

/// The process-wide registry holding the built-in methods.
pub fn registry() -> &'static InverterRegistry {
    static REGISTRY: OnceLock<InverterRegistry> = OnceLock::new();
    REGISTRY.get_or_init(InverterRegistry::with_defaults)
}

/// Inverts `transform` at time `u` with the configured method.
pub fn laplace_invert(transform: &TransformEvaluator, u: f64, config: &InverterConfig) -> Result<f64> {
    let inverter = config.build()?;
    invert_evaluator(inverter.as_ref(), transform, u)
}

/// Inverts `Σ e^{−zθⱼ}Gⱼ(z)` term by term as `Σ gⱼ(u − θⱼ)`, each term zero for `u <= θⱼ`.
/// A recorded jump `J = gⱼ(0+)` is inverted exactly, leaving `Gⱼ − J/z` for the inverter.
pub fn invert_evaluator(inverter: &dyn LaplaceInverter, transform: &TransformEvaluator, u: f64) -> Result<f64> {
    let mut total = 0.0;
    for i in 0..transform.part_count() {
        let (delay, jump) = transform.part_delay_and_jump(i);
        if u <= delay {
            continue;
        }
        total += if jump == 0.0 {
            inverter.invert(&|z| transform.eval_part(i, z), u - delay)?
        } else {
            inverter.invert(&|z| Ok(transform.eval_part(i, z)? - jump / z), u - delay)? + jump
        };
    }
    Ok(total)
}

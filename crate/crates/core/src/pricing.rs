//! Prices: the Black–Scholes call, the Paris down-and-in call by integrating the
//! inverted knock-in density against the payoff, and the down-and-out call by parity.
//!
//! In normalized coordinates the down-and-in call is
//!
//! ```text
//! C = e^{−(r + ϖ²/2)τ} ∫_β^∞ e^{ϖx} (S e^{σx} − K) h_b(τ, x) dx
//! ```
//!
//! where `h_b(τ, ·)` is recovered at each quadrature node by inverting its Laplace
//! transform at `u = τ`.

use std::fmt;
use std::sync::Arc;

use log::debug;

use crate::error::{Error, Result, Stage};
use crate::inversion::quadrature::{try_integrate, Domain, GaussianDecay, Pair, GAUSSIAN_CUTOFF_SIGMAS};
use crate::inversion::{invert_evaluator, InverterConfig, LaplaceInverter};
use crate::model::{derive_params, Constellation, DerivedParams, MarketParams, ParisianContract};
use crate::special::normal_cdf;
use crate::transforms::{form_registry, DensityTransform, ExcursionSpec};

/// Largest tolerated mass of negative inverted density before a price is refused.
pub const NEGATIVE_MASS_LIMIT: f64 = 1e-4;

/// Black–Scholes call with continuous dividend yield. For `tau <= 0` the intrinsic value.
pub fn vanilla_call(market: &MarketParams, strike: f64, tau: f64) -> f64 {
    let MarketParams {
        spot,
        rate,
        dividend,
        volatility,
    } = *market;
    if !(tau > 0.0) {
        return (spot - strike).max(0.0);
    }
    let forward_spot = spot * (-dividend * tau).exp();
    let discounted_strike = strike * (-rate * tau).exp();
    let s = volatility * tau.sqrt();
    if !(s > 0.0) || strike <= 0.0 {
        return (forward_spot - discounted_strike).max(0.0);
    }
    let d1 = ((spot / strike).ln() + (rate - dividend) * tau) / s + 0.5 * s;
    let d2 = d1 - s;
    (forward_spot * normal_cdf(d1) - discounted_strike * normal_cdf(d2)).max(0.0)
}

/// Numerical settings of the analytical pricer.
#[derive(Debug, Clone, PartialEq)]
pub struct NumericsConfig {
    pub inverter: InverterConfig,
    /// Tolerance of the spatial integrals inside each transform evaluation.
    pub quad_tol: f64,
    /// Tolerance of the payoff integral over the knock-in density.
    pub outer_tol: f64,
    /// Transform form used when spot is below the barrier; see [`crate::transforms::forms`].
    pub positive_form: String,
}

impl Default for NumericsConfig {
    fn default() -> Self {
        Self {
            inverter: InverterConfig::default(),
            quad_tol: 1e-10,
            outer_tol: 1e-7,
            positive_form: "split".to_string(),
        }
    }
}

impl NumericsConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, tol) in [("quad_tol", self.quad_tol), ("outer_tol", self.outer_tol)] {
            if !(tol > 0.0 && tol < 1.0) {
                return Err(Error::config(format!("numerics.{name} must lie in (0, 1), got {tol}")));
            }
        }
        form_registry().get(&self.positive_form)?;
        Ok(())
    }
}

/// How a price was obtained.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PriceDiagnostics {
    pub inverter: String,
    pub terms: usize,
    pub precision_target: f64,
    pub transform_form: String,
    /// Knock-in time threshold `D` or `d`.
    pub threshold: f64,
    /// Time resolution of the inverter at `τ`.
    pub resolution: f64,
    /// Integration range of the payoff integral in normalized log-price.
    pub x_range: Option<(f64, f64)>,
    /// Density nodes, i.e. number of inversions.
    pub density_nodes: usize,
    /// Transform evaluations across all inversions.
    pub transform_evaluations: usize,
    pub error_estimate: f64,
    /// Mass of negative inverted density that was clamped to zero.
    pub negative_mass: f64,
    /// Set when the value needed no numerics.
    pub short_circuit: Option<String>,
    /// Amount by which a parity value was raised to zero.
    pub clamped: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PriceResult {
    pub value: f64,
    pub method: String,
    pub diagnostics: PriceDiagnostics,
}

impl fmt::Display for PriceResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} ({})", self.value, self.method)
    }
}

fn diagnostics_for(inverter: &dyn LaplaceInverter, numerics: &NumericsConfig, p: &DerivedParams) -> PriceDiagnostics {
    PriceDiagnostics {
        inverter: inverter.name().to_string(),
        terms: numerics.inverter.terms,
        precision_target: numerics.inverter.precision_target,
        threshold: p.threshold(),
        resolution: inverter.resolution(p.tau),
        ..PriceDiagnostics::default()
    }
}

/// Range of normalized terminal log-prices carrying the payoff-weighted density.
///
/// The density of `W*(τ)` on the knock-in event sits below `max(0, b)` up to a
/// Gaussian spread of at most `√(τ + D)`; the payoff weight tilts it by
/// `(ϖ + σ)τ` upwards, `ϖτ` downwards.
fn payoff_range(p: &DerivedParams, sigma: f64) -> (GaussianDecay, f64, f64) {
    let spread = (p.tau + p.window).sqrt();
    let upper = GaussianDecay::new(p.b.max(0.0) + (p.varpi + sigma).max(0.0) * p.tau, spread);
    let lower = p.b.min(0.0) - GAUSSIAN_CUTOFF_SIGMAS * spread + p.varpi.min(0.0) * p.tau;
    (upper, lower.max(p.beta), upper.upper_cutoff())
}

/// Paris down-and-in call.
pub fn paris_down_in_call(
    market: &MarketParams,
    contract: &ParisianContract,
    numerics: &NumericsConfig,
) -> Result<PriceResult> {
    let p = derive_params(market, contract)?;
    numerics.validate()?;
    let inverter = numerics.inverter.build()?;
    let mut diagnostics = diagnostics_for(inverter.as_ref(), numerics, &p);
    let method = |form: &str| format!("laplace/{}/{}", inverter.name(), form);

    if p.b == f64::NEG_INFINITY {
        diagnostics.short_circuit = Some("zero barrier: the price never falls below it".into());
        return Ok(PriceResult {
            value: 0.0,
            method: "short-circuit".into(),
            diagnostics,
        });
    }
    let threshold = p.threshold();
    if p.tau < threshold {
        diagnostics.short_circuit = Some(format!(
            "maturity {} is shorter than the time {threshold} needed to knock in",
            p.tau
        ));
        return Ok(PriceResult {
            value: 0.0,
            method: "short-circuit".into(),
            diagnostics,
        });
    }
    if p.tau - threshold < diagnostics.resolution {
        return Err(Error::domain(format!(
            "maturity {} lies within the inverter resolution {} of the knock-in threshold {threshold}; \
             the density jumps there and cannot be inverted reliably",
            p.tau, diagnostics.resolution
        )));
    }

    let spec = ExcursionSpec::from_params(&p)?;
    let form = form_registry().select(&spec, &numerics.positive_form)?;
    diagnostics.transform_form = form.name().to_string();

    let (decay, lo, hi) = payoff_range(&p, market.volatility);
    if !(lo < hi) {
        // Strike beyond every reachable log-price.
        diagnostics.x_range = Some((lo, hi));
        return Ok(PriceResult {
            value: 0.0,
            method: method(form.name()),
            diagnostics,
        });
    }
    diagnostics.x_range = Some((lo, hi));

    let nodes = std::sync::atomic::AtomicUsize::new(0);
    let density = |x: f64| -> Result<f64> {
        nodes.fetch_add(1, std::sync::atomic::Ordering::Relaxed);
        let ev = form.evaluator(&spec, x, numerics.quad_tol)?;
        invert_evaluator(inverter.as_ref(), &ev, p.tau)
            .map_err(|e| e.with_context(Stage::Pricing, format_args!("density node x = {x}")))
    };
    let weight = |x: f64| (p.varpi * x).exp() * (market.spot * (market.volatility * x).exp() - contract.strike);
    let splits: Vec<f64> = [p.b.min(0.0), p.b.max(0.0), decay.center]
        .into_iter()
        .filter(|s| *s > lo && *s < hi)
        .collect();
    let r = try_integrate(
        |x: f64| {
            let h = density(x)?;
            Ok(Pair(weight(x) * h.max(0.0), (-h).max(0.0)))
        },
        Domain::Interval(lo, hi),
        numerics.outer_tol,
        &splits,
    )
    .map_err(|e| e.with_context(Stage::Pricing, "payoff integral over the knock-in density"))?;

    let discount = (-(market.rate + 0.5 * p.varpi * p.varpi) * p.tau).exp();
    let Pair(integral, negative_mass) = r.value;
    let evaluations = nodes.into_inner();
    diagnostics.density_nodes = evaluations;
    diagnostics.transform_evaluations = evaluations * (inverter.nodes() + 2);
    diagnostics.error_estimate = discount * r.error_estimate;
    diagnostics.negative_mass = negative_mass;
    debug!(
        "down-in price: {} density nodes on [{lo}, {hi}], negative mass {negative_mass:e}",
        evaluations
    );
    if negative_mass > NEGATIVE_MASS_LIMIT {
        return Err(Error::numerical(
            Stage::Pricing,
            format!(
                "inverted density has negative mass {negative_mass:e} (limit {NEGATIVE_MASS_LIMIT:e}); \
                 the inversion is misconfigured for this maturity"
            ),
            negative_mass,
        ));
    }
    let value = discount * integral;
    if !value.is_finite() {
        return Err(Error::numerical(Stage::Pricing, "price is not finite", value));
    }
    Ok(PriceResult {
        value: value.max(0.0),
        method: method(form.name()),
        diagnostics,
    })
}

/// Paris down-and-out call, `vanilla − down-and-in`.
pub fn paris_down_out_call(
    market: &MarketParams,
    contract: &ParisianContract,
    numerics: &NumericsConfig,
) -> Result<PriceResult> {
    let knock_in = paris_down_in_call(market, contract, numerics)?;
    let vanilla = vanilla_call(market, contract.strike, contract.time_to_maturity);
    let raw = vanilla - knock_in.value;
    let mut diagnostics = knock_in.diagnostics;
    let tolerance = numerics.outer_tol * vanilla.max(1.0) + diagnostics.error_estimate;
    if raw < -tolerance {
        log::warn!("down-and-out value {raw} is negative beyond tolerance {tolerance:e}; clamped to zero");
    }
    if raw < 0.0 {
        diagnostics.clamped = Some(-raw);
    }
    Ok(PriceResult {
        value: raw.max(0.0),
        method: format!("parity/{}", knock_in.method),
        diagnostics,
    })
}

/// Whether the contract can still knock in before maturity.
pub fn can_knock_in(market: &MarketParams, contract: &ParisianContract) -> Result<bool> {
    let p = derive_params(market, contract)?;
    Ok(p.b != f64::NEG_INFINITY
        && p.tau >= match p.constellation() {
            Constellation::AtOrAbove => p.window,
            Constellation::Below => p.d,
        })
}

/// `h_b(u, ·)`, the density of `W*(u)` on the knock-in event, for one contract.
pub struct KnockInDensity {
    /// `None` when the density vanishes identically at `u`.
    active: Option<(ExcursionSpec, Arc<dyn DensityTransform>)>,
    inverter: Box<dyn LaplaceInverter>,
    quad_tol: f64,
    u: f64,
}

impl KnockInDensity {
    /// Rejects `u` within the inverter resolution above the knock-in threshold, as pricing does.
    pub fn new(market: &MarketParams, contract: &ParisianContract, numerics: &NumericsConfig, u: f64) -> Result<Self> {
        if !(u > 0.0 && u.is_finite()) {
            return Err(Error::domain(format!("density time must be finite and > 0, got {u}")));
        }
        let p = derive_params(market, contract)?;
        numerics.validate()?;
        let inverter = numerics.inverter.build()?;
        let threshold = p.threshold();
        let active = if p.b == f64::NEG_INFINITY || u < threshold {
            None
        } else if u - threshold < inverter.resolution(u) {
            return Err(Error::domain(format!(
                "time {u} lies within the inverter resolution {} of the knock-in threshold {threshold}",
                inverter.resolution(u)
            )));
        } else {
            let spec = ExcursionSpec::from_params(&p)?;
            let form = form_registry().select(&spec, &numerics.positive_form)?;
            Some((spec, form))
        };
        Ok(Self {
            active,
            inverter,
            quad_tol: numerics.quad_tol,
            u,
        })
    }

    /// The transform form in use, `None` when the density is identically zero.
    pub fn form(&self) -> Option<&'static str> {
        self.active.as_ref().map(|(_, f)| f.name())
    }

    /// The inverted value at `y`; round-off can leave it slightly negative.
    pub fn at(&self, y: f64) -> Result<f64> {
        let Some((spec, form)) = &self.active else {
            return Ok(0.0);
        };
        let ev = form.evaluator(spec, y, self.quad_tol)?;
        invert_evaluator(self.inverter.as_ref(), &ev, self.u)
            .map_err(|e| e.with_context(Stage::Density, format_args!("y = {y}")))
    }
}

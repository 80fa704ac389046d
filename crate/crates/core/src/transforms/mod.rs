//! Laplace transforms in time of the Paris option density `h_b(·, y)`.
//!
//! `H` is the time at which the normalized Brownian motion `W*` completes a stay
//! of length `D` below `b` (with `D − d` already served when `b > 0`), and
//! `h_b(u, y)` is the density of `W*(u)` on `{H < u}`. By the strong Markov
//! property its transform is `E[e^{−zH}·e^{−|W*(H)−y|√(2z)}/√(2z)]`.
//!
//! For `b <= 0`, `H = T_b + H₀` with the meander-driven `H₀` independent of its
//! knock-in position, so the expectation factors into
//! `E[e^{−zH}] · ∫ e^{−|x−y|√(2z)}/√(2z) μ*(dx)`.
//! For `b > 0` the event `{T_b <= d}` splits the law: on it the same
//! factorization holds after `T_b`; off it `H = d` exactly and `W*(d)` follows
//! the reflection-principle density below `b`. The [`forms`] module provides
//! several algebraic arrangements of this case.

pub mod densities;
pub mod forms;
pub mod kernels;

use std::fmt;

use num_complex::Complex64;

pub use densities::{h_b3_closed, h_b3_integral, h_b4_closed, h_b4_integral, h_b4_transform, HB3Density};
pub use forms::{
    form_registry, hb_transform_nonpos, hb_transform_pos_grouped, hb_transform_pos_product, hb_transform_pos_split,
    DensityTransform, FormRegistry, GroupedTerms,
};
pub use kernels::MeasureDomain;

use crate::error::{Error, Result};
use crate::inversion::quadrature::{integrate, Domain, DEFAULT_TOL};
use crate::model::{Constellation, DerivedParams};
use crate::special::{erf, psi_scaled, truncated_fp_transform_with_tol, ComplexValue};

/// Parameters of the excursion time `H`: barrier `b`, window `D`, and remaining time `d`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExcursionSpec {
    pub b: f64,
    pub window: f64,
    pub remaining: f64,
}

impl ExcursionSpec {
    pub fn new(b: f64, window: f64, remaining: f64) -> Result<Self> {
        if b.is_nan() || b == f64::INFINITY {
            return Err(Error::domain(format!("barrier coordinate must be a number < +inf, got {b}")));
        }
        if !(window > 0.0 && window.is_finite()) {
            return Err(Error::domain(format!("window must be finite and > 0, got {window}")));
        }
        if !(remaining > 0.0 && remaining <= window) {
            return Err(Error::domain(format!(
                "remaining time must lie in (0, window], got {remaining} with window {window}"
            )));
        }
        if b <= 0.0 && remaining != window {
            return Err(Error::domain(
                "an excursion can only be in progress below the barrier (b <= 0 requires remaining == window)",
            ));
        }
        Ok(Self { b, window, remaining })
    }

    /// No excursion in progress.
    pub fn fresh(b: f64, window: f64) -> Result<Self> {
        Self::new(b, window, window)
    }

    pub fn from_params(p: &DerivedParams) -> Result<Self> {
        Self::new(p.b, p.window, p.d)
    }

    pub fn constellation(&self) -> Constellation {
        if self.b > 0.0 {
            Constellation::Below
        } else {
            Constellation::AtOrAbove
        }
    }

    /// Smallest possible value of `H`.
    pub fn threshold(&self) -> f64 {
        match self.constellation() {
            Constellation::AtOrAbove => self.window,
            Constellation::Below => self.remaining,
        }
    }

    /// Time already served on the running excursion.
    pub fn elapsed(&self) -> f64 {
        self.window - self.remaining
    }
}

type EvalFn = dyn Fn(ComplexValue) -> Result<ComplexValue> + Send + Sync;

/// One term `e^{−zθ}·G(z)` of a transform; `G` is the transform of `u ↦ g(u)`
/// and the term contributes `g(u − θ)` for `u > θ`.
struct Part {
    delay: f64,
    /// `g(0+)`, zero unless recorded.
    jump: f64,
    shifted: Box<EvalFn>,
}

/// A Laplace transform of a real function of time, evaluable on `Re z > 0`.
///
/// The transform is held as a sum of delayed terms `Σ e^{−zθⱼ}·Gⱼ(z)`. Each
/// `Gⱼ` is inverted on its own, so no phase rotation `e^{−zθ}` reaches the
/// contour and every inverted function is smooth after its own start.
pub struct TransformEvaluator {
    parts: Vec<Part>,
    domain_note: String,
}

impl fmt::Debug for TransformEvaluator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let delays: Vec<(f64, f64)> = self.parts.iter().map(|p| (p.delay, p.jump)).collect();
        f.debug_struct("TransformEvaluator")
            .field("domain_note", &self.domain_note)
            .field("delays_and_jumps", &delays)
            .finish_non_exhaustive()
    }
}

impl TransformEvaluator {
    pub fn new<F>(domain_note: impl Into<String>, eval: F) -> Self
    where
        F: Fn(ComplexValue) -> Result<ComplexValue> + Send + Sync + 'static,
    {
        Self::delayed(domain_note, 0.0, eval)
    }

    /// A single term `e^{−z·delay}·shifted(z)`.
    pub fn delayed<F>(domain_note: impl Into<String>, delay: f64, shifted: F) -> Self
    where
        F: Fn(ComplexValue) -> Result<ComplexValue> + Send + Sync + 'static,
    {
        Self {
            parts: vec![Part {
                delay,
                jump: 0.0,
                shifted: Box::new(shifted),
            }],
            domain_note: domain_note.into(),
        }
    }

    /// Adds the term `e^{−z·delay}·shifted(z)`, merging it into a term with the same delay.
    pub fn plus<F>(mut self, delay: f64, shifted: F) -> Self
    where
        F: Fn(ComplexValue) -> Result<ComplexValue> + Send + Sync + 'static,
    {
        match self.parts.iter().position(|p| p.delay == delay) {
            Some(i) => {
                let Part { jump, shifted: previous, .. } = self.parts.remove(i);
                let merged = Part {
                    delay,
                    jump,
                    shifted: Box::new(move |z| Ok(previous(z)? + shifted(z)?)),
                };
                self.parts.insert(i, merged);
            }
            None => self.parts.push(Part {
                delay,
                jump: 0.0,
                shifted: Box::new(shifted),
            }),
        }
        self
    }

    /// Records `g(0+)` of the first term.
    pub fn with_jump(mut self, jump: f64) -> Self {
        self.parts[0].jump = jump;
        self
    }

    fn check(&self, z: ComplexValue) -> Result<()> {
        if !(z.re > 0.0) || !z.im.is_finite() {
            return Err(Error::domain(format!(
                "transform evaluated at {z}, outside the right half-plane ({})",
                self.domain_note
            )));
        }
        Ok(())
    }

    pub fn eval(&self, z: ComplexValue) -> Result<ComplexValue> {
        self.check(z)?;
        self.parts.iter().try_fold(Complex64::new(0.0, 0.0), |acc, p| {
            let v = (p.shifted)(z)?;
            Ok(acc + if p.delay == 0.0 { v } else { (-z * p.delay).exp() * v })
        })
    }

    pub fn part_count(&self) -> usize {
        self.parts.len()
    }

    /// `(θ, g(0+))` of term `i`.
    pub fn part_delay_and_jump(&self, i: usize) -> (f64, f64) {
        (self.parts[i].delay, self.parts[i].jump)
    }

    /// `Gᵢ(z)`, term `i` with its delay divided out.
    pub fn eval_part(&self, i: usize, z: ComplexValue) -> Result<ComplexValue> {
        self.check(z)?;
        (self.parts[i].shifted)(z)
    }

    /// The time before which the function vanishes.
    pub fn delay(&self) -> f64 {
        self.parts.iter().map(|p| p.delay).fold(f64::INFINITY, f64::min)
    }

    pub fn domain_note(&self) -> &str {
        &self.domain_note
    }
}

/// Principal square root of `2z`.
#[inline]
pub(crate) fn sqrt_2z(z: ComplexValue) -> ComplexValue {
    (2.0 * z).sqrt()
}

/// `e^{−Dz}·Ψ(√(2Dz))`; its reciprocal is `e^{Dz}·E[e^{−zH₀}]`.
#[inline]
pub(crate) fn psi_window_scaled(window: f64, z: ComplexValue) -> Result<ComplexValue> {
    psi_scaled((2.0 * window * z).sqrt())
}

/// `E[e^{−zH}]` for the excursion time described by `spec`.
pub fn exit_time_transform(spec: &ExcursionSpec, z: ComplexValue) -> Result<ComplexValue> {
    exit_time_transform_with_tol(spec, z, DEFAULT_TOL)
}

pub fn exit_time_transform_with_tol(spec: &ExcursionSpec, z: ComplexValue, tol: f64) -> Result<ComplexValue> {
    if !(z.re > 0.0) {
        return Err(Error::domain(format!("exit time transform needs Re z > 0, got {z}")));
    }
    if spec.b == f64::NEG_INFINITY {
        return Ok(Complex64::new(0.0, 0.0));
    }
    let restart = (-z * spec.window).exp() / psi_window_scaled(spec.window, z)?;
    match spec.constellation() {
        Constellation::AtOrAbove => Ok((spec.b * sqrt_2z(z)).exp() * restart),
        Constellation::Below => {
            let d = spec.remaining;
            let survive = erf(spec.b / (2.0 * d).sqrt());
            let hit = truncated_fp_transform_with_tol(spec.b, d, z, tol)?;
            Ok(survive * (-z * d).exp() + hit * restart)
        }
    }
}

/// Density of the knock-in position `W*(H)` for `b <= 0`:
/// `(b − x)·exp(−(x − b)²/(2D))/D` on `x <= b`.
pub fn hitting_measure_density(spec: &ExcursionSpec, x: f64) -> Result<f64> {
    if spec.b > 0.0 {
        return Err(Error::domain(
            "hitting measure density is only defined for b <= 0; use the event-split measures for b > 0",
        ));
    }
    Ok(rayleigh_below(spec.b, spec.window, x))
}

#[inline]
pub(crate) fn rayleigh_below(b: f64, window: f64, x: f64) -> f64 {
    if x > b {
        0.0
    } else {
        let r = b - x;
        r * (-r * r / (2.0 * window)).exp() / window
    }
}

/// A finite measure on the real line, as consumed by [`lemma_transform`].
pub enum Measure<'a> {
    Atom { at: f64, mass: f64 },
    Density {
        density: &'a (dyn Fn(f64) -> f64 + Sync),
        domain: Domain,
        splits: &'a [f64],
    },
}

/// `exit_transform · ∫ e^{−|x−y|√(2z)}/√(2z) μ(dx)`.
pub fn lemma_transform(
    exit_transform: ComplexValue,
    measure: &Measure<'_>,
    y: f64,
    z: ComplexValue,
    tol: f64,
) -> Result<ComplexValue> {
    if !(z.re > 0.0) {
        return Err(Error::domain(format!("lemma transform needs Re z > 0, got {z}")));
    }
    let k = sqrt_2z(z);
    let integral = match measure {
        Measure::Atom { at, mass } => *mass * (-(at - y).abs() * k).exp(),
        Measure::Density { density, domain, splits } => {
            let mut cuts = splits.to_vec();
            cuts.push(y);
            integrate(|x: f64| density(x) * (-(x - y).abs() * k).exp(), *domain, tol, &cuts)?.value
        }
    };
    Ok(exit_transform * integral / k)
}

//! Arrangements of the density transform, registered by name.
//!
//! * `nonpositive` — the `b <= 0` closed form built on the meander law.
//! * `split` — `b > 0`, the expectation split on `{T_b <= d}` before factoring:
//!   `(F(z)/Ψ)·A(y) + e^{−zd}·B(y)`.
//! * `product` — `b > 0`, `E[e^{−zH}]·(Q(T_b<=d)·A(y) + B(y))`, i.e. the exit
//!   transform times the integral against the total knock-in law.
//! * `grouped` — `product` multiplied out into the four-term sum
//!   `Erfc·L₁ + L₂/√(2πd) + Erfc·Erf·L₃ + Erf·L₄`, with the surviving-path
//!   measure on `x < b`.
//! * `grouped-printed` — the same four terms with the surviving-path integrals
//!   over the whole line.
//!
//! Here `F(z) = ∫₀^d e^{−zw} μ_b(dw)`, `A(y) = ∫ e^{−|x−y|k}/k` against the
//! normalized meander law below `b`, and `B(y)` the same against the
//! surviving-path density. `product` and `split` differ by
//! `(Erfc·e^{−zd} − F/Ψ)·(Erf·A − B)`, which does not vanish: `H` and `W*(H)`
//! are not independent when an excursion is already running. `split` is the
//! transform the path-level estimator targets.

use std::sync::{Arc, OnceLock};

use num_complex::Complex64;

use super::kernels::{killed_kernel, killed_normalization, rayleigh_kernel, MeasureDomain};
use super::{psi_window_scaled, sqrt_2z, ExcursionSpec, TransformEvaluator};
use crate::error::{Error, Result};
use crate::model::Constellation;
use crate::special::{erf, erfc, fp_tail_transform, truncated_fp_transform_with_tol, ComplexValue};

/// A way of evaluating `𝓛(h_b(·, y))` for one constellation.
pub trait DensityTransform: Send + Sync {
    fn name(&self) -> &'static str;
    fn supports(&self, constellation: Constellation) -> bool;
    fn evaluator(&self, spec: &ExcursionSpec, y: f64, tol: f64) -> Result<TransformEvaluator>;
}

fn require(form: &dyn DensityTransform, spec: &ExcursionSpec) -> Result<()> {
    if form.supports(spec.constellation()) {
        Ok(())
    } else {
        Err(Error::domain(format!(
            "transform form `{}` does not apply to b = {}",
            form.name(),
            spec.b
        )))
    }
}

pub struct NonPositive;

impl DensityTransform for NonPositive {
    fn name(&self) -> &'static str {
        "nonpositive"
    }

    fn supports(&self, c: Constellation) -> bool {
        c == Constellation::AtOrAbove
    }

    fn evaluator(&self, spec: &ExcursionSpec, y: f64, tol: f64) -> Result<TransformEvaluator> {
        require(self, spec)?;
        let ExcursionSpec { b, window, .. } = *spec;
        Ok(TransformEvaluator::delayed(
            format!("b={b} <= 0, D={window}, y={y}; Re z > 0"),
            window,
            move |z| {
                if b == f64::NEG_INFINITY {
                    return Ok(Complex64::new(0.0, 0.0));
                }
                let k = sqrt_2z(z);
                let inner = rayleigh_kernel(b - y, window, k, tol)?;
                Ok((b * k).exp() / (window * k * psi_window_scaled(window, z)?) * inner)
            },
        ))
    }
}

/// `(1/(Dk))·∫₀^∞ x e^{−x²/2D − |b−x−y|k} dx`: the meander law at `y`, moved on freely.
fn meander(spec: &ExcursionSpec, y: f64, k: ComplexValue, tol: f64) -> Result<ComplexValue> {
    Ok(rayleigh_kernel(spec.b - y, spec.window, k, tol)? / (spec.window * k))
}

/// `(1/(√(2πd)k))·∫ e^{−|x−y|k} f_{b,d}(x) dx`: the surviving-path law at `y`, moved on freely.
fn survivor(spec: &ExcursionSpec, y: f64, k: ComplexValue, domain: MeasureDomain, tol: f64) -> Result<ComplexValue> {
    let ExcursionSpec { b, remaining: d, .. } = *spec;
    Ok(killed_kernel(b, d, y, k, domain, tol)? * killed_normalization(d) / k)
}

/// `lim z·meander` as `z → ∞`: the Rayleigh law at `b − y`.
fn meander_jump(spec: &ExcursionSpec, y: f64) -> f64 {
    let c = spec.b - y;
    if c > 0.0 {
        c * (-c * c / (2.0 * spec.window)).exp() / spec.window
    } else {
        0.0
    }
}

/// `lim z·survivor` as `z → ∞`: the surviving-path density at `y`.
fn survivor_jump(spec: &ExcursionSpec, y: f64, domain: MeasureDomain) -> f64 {
    let ExcursionSpec { b, remaining: d, .. } = *spec;
    if domain == MeasureDomain::BelowBarrier && y >= b {
        return 0.0;
    }
    killed_normalization(d) * ((-y * y / (2.0 * d)).exp() - (-(y - 2.0 * b) * (y - 2.0 * b) / (2.0 * d)).exp())
}

fn erf_pair(spec: &ExcursionSpec) -> (f64, f64) {
    let x = spec.b / (2.0 * spec.remaining).sqrt();
    (erf(x), erfc(x))
}

/// `e^{−zd}·direct(z) + (F(z)/Ψ)·after(z)` as three delayed terms.
///
/// With `F = e^{−bk} − e^{−zd}·T(z)` and `1/Ψ = e^{−zD}/Ψ̃`, the restart splits into
/// `e^{−zD}·e^{−bk}/Ψ̃` and `−e^{−z(d+D)}·T/Ψ̃`; inverting `F` whole would leave
/// the truncation of the first passage law at `d` inside the contour window.
fn positive_evaluator<P, Q>(spec: ExcursionSpec, y: f64, direct: P, jump: f64, after: Q) -> TransformEvaluator
where
    P: Fn(ComplexValue, ComplexValue) -> Result<ComplexValue> + Send + Sync + 'static,
    Q: Fn(ComplexValue, ComplexValue) -> Result<ComplexValue> + Send + Sync + 'static,
{
    let ExcursionSpec { b, window, remaining: d } = spec;
    let after = Arc::new(after);
    let tail_after = Arc::clone(&after);
    TransformEvaluator::delayed(
        format!("b={b} > 0, D={window}, d={d}, y={y}; Re z > 0"),
        d,
        move |z| direct(z, sqrt_2z(z)),
    )
    .with_jump(jump)
    .plus(window, move |z| {
        let k = sqrt_2z(z);
        Ok((-b * k).exp() / psi_window_scaled(window, z)? * after(z, k)?)
    })
    .plus(d + window, move |z| {
        let k = sqrt_2z(z);
        Ok(-fp_tail_transform(b, d, z)? / psi_window_scaled(window, z)? * tail_after(z, k)?)
    })
}

pub struct Split;

impl DensityTransform for Split {
    fn name(&self) -> &'static str {
        "split"
    }

    fn supports(&self, c: Constellation) -> bool {
        c == Constellation::Below
    }

    fn evaluator(&self, spec: &ExcursionSpec, y: f64, tol: f64) -> Result<TransformEvaluator> {
        require(self, spec)?;
        let s = *spec;
        Ok(positive_evaluator(
            s,
            y,
            move |_, k| survivor(&s, y, k, MeasureDomain::BelowBarrier, tol),
            survivor_jump(&s, y, MeasureDomain::BelowBarrier),
            move |_, k| meander(&s, y, k, tol),
        ))
    }
}

pub struct Product;

impl DensityTransform for Product {
    fn name(&self) -> &'static str {
        "product"
    }

    fn supports(&self, c: Constellation) -> bool {
        c == Constellation::Below
    }

    fn evaluator(&self, spec: &ExcursionSpec, y: f64, tol: f64) -> Result<TransformEvaluator> {
        require(self, spec)?;
        let s = *spec;
        let (erf, erfc) = erf_pair(&s);
        let law = move |k| -> Result<ComplexValue> {
            Ok(erfc * meander(&s, y, k, tol)? + survivor(&s, y, k, MeasureDomain::BelowBarrier, tol)?)
        };
        let jump = erf * (erfc * meander_jump(&s, y) + survivor_jump(&s, y, MeasureDomain::BelowBarrier));
        Ok(positive_evaluator(s, y, move |_, k| Ok(erf * law(k)?), jump, move |_, k| law(k)))
    }
}

/// The four transforms `𝓛(h_{b,1..4}(·, y))(z)` and their coefficients.
#[derive(Debug, Clone, Copy)]
pub struct GroupedTerms {
    pub transforms: [ComplexValue; 4],
    pub coefficients: [f64; 4],
}

impl GroupedTerms {
    pub fn at(spec: &ExcursionSpec, y: f64, z: ComplexValue, domain: MeasureDomain, tol: f64) -> Result<Self> {
        if spec.constellation() != Constellation::Below {
            return Err(Error::domain("the four-term sum applies to b > 0 only"));
        }
        let ExcursionSpec { b, window, remaining: d } = *spec;
        let k = sqrt_2z(z);
        let restart = truncated_fp_transform_with_tol(b, d, z, tol)? * (-z * window).exp() / psi_window_scaled(window, z)?;
        let delay = (-z * d).exp();
        let rayleigh = meander(spec, y, k, tol)?;
        let killed = killed_kernel(b, d, y, k, domain, tol)? / k;
        Ok(Self {
            transforms: [restart * rayleigh, restart * killed, delay * rayleigh, delay * killed_normalization(d) * killed],
            coefficients: Self::coefficients(spec),
        })
    }

    fn coefficients(spec: &ExcursionSpec) -> [f64; 4] {
        let (erf, erfc) = erf_pair(spec);
        [erfc, killed_normalization(spec.remaining), erfc * erf, erf]
    }

    pub fn weighted(&self) -> [ComplexValue; 4] {
        std::array::from_fn(|i| self.transforms[i] * self.coefficients[i])
    }

    pub fn sum(&self) -> ComplexValue {
        self.weighted().iter().sum()
    }
}

pub struct Grouped {
    domain: MeasureDomain,
}

impl Grouped {
    pub fn below_barrier() -> Self {
        Self {
            domain: MeasureDomain::BelowBarrier,
        }
    }

    pub fn whole_line() -> Self {
        Self {
            domain: MeasureDomain::WholeLine,
        }
    }
}

impl DensityTransform for Grouped {
    fn name(&self) -> &'static str {
        match self.domain {
            MeasureDomain::BelowBarrier => "grouped",
            MeasureDomain::WholeLine => "grouped-printed",
        }
    }

    fn supports(&self, c: Constellation) -> bool {
        c == Constellation::Below
    }

    fn evaluator(&self, spec: &ExcursionSpec, y: f64, tol: f64) -> Result<TransformEvaluator> {
        require(self, spec)?;
        let (s, domain) = (*spec, self.domain);
        let [c1, c2, c3, c4] = GroupedTerms::coefficients(&s);
        // h₃, h₄ start at d; h₁, h₂ restart after a first passage.
        let direct = move |_, k| -> Result<ComplexValue> {
            Ok(c3 * meander(&s, y, k, tol)? + c4 * survivor(&s, y, k, domain, tol)?)
        };
        let after = move |_, k| -> Result<ComplexValue> {
            Ok(c1 * meander(&s, y, k, tol)? + c2 * killed_kernel(s.b, s.remaining, y, k, domain, tol)? / k)
        };
        let jump = c3 * meander_jump(&s, y) + c4 * survivor_jump(&s, y, domain);
        Ok(positive_evaluator(s, y, direct, jump, after))
    }
}

/// Name → form table.
pub struct FormRegistry {
    forms: Vec<Arc<dyn DensityTransform>>,
}

impl FormRegistry {
    pub fn with_defaults() -> Self {
        Self {
            forms: vec![
                Arc::new(NonPositive),
                Arc::new(Split),
                Arc::new(Product),
                Arc::new(Grouped::below_barrier()),
                Arc::new(Grouped::whole_line()),
            ],
        }
    }

    pub fn register(&mut self, form: Arc<dyn DensityTransform>) {
        self.forms.retain(|f| f.name() != form.name());
        self.forms.push(form);
    }

    pub fn names(&self) -> impl Iterator<Item = &'static str> + '_ {
        self.forms.iter().map(|f| f.name())
    }

    pub fn get(&self, name: &str) -> Result<Arc<dyn DensityTransform>> {
        self.forms.iter().find(|f| f.name() == name).cloned().ok_or_else(|| {
            Error::config(format!(
                "unknown transform form `{name}` (known: {})",
                self.names().collect::<Vec<_>>().join(", ")
            ))
        })
    }

    /// The form to use for `spec`: `nonpositive` when `b <= 0`, otherwise `positive_form`.
    pub fn select(&self, spec: &ExcursionSpec, positive_form: &str) -> Result<Arc<dyn DensityTransform>> {
        let form = match spec.constellation() {
            Constellation::AtOrAbove => self.get("nonpositive")?,
            Constellation::Below => self.get(positive_form)?,
        };
        require(form.as_ref(), spec)?;
        Ok(form)
    }
}

pub fn form_registry() -> &'static FormRegistry {
    static REGISTRY: OnceLock<FormRegistry> = OnceLock::new();
    REGISTRY.get_or_init(FormRegistry::with_defaults)
}

pub fn hb_transform_nonpos(spec: &ExcursionSpec, y: f64, tol: f64) -> Result<TransformEvaluator> {
    NonPositive.evaluator(spec, y, tol)
}

pub fn hb_transform_pos_product(spec: &ExcursionSpec, y: f64, tol: f64) -> Result<TransformEvaluator> {
    Product.evaluator(spec, y, tol)
}

pub fn hb_transform_pos_grouped(spec: &ExcursionSpec, y: f64, tol: f64) -> Result<TransformEvaluator> {
    Grouped::below_barrier().evaluator(spec, y, tol)
}

pub fn hb_transform_pos_split(spec: &ExcursionSpec, y: f64, tol: f64) -> Result<TransformEvaluator> {
    Split.evaluator(spec, y, tol)
}

//! Time-domain densities behind the `e^{−zd}` terms of the `b > 0` sum.

use std::f64::consts::PI;

use log::warn;

use super::kernels::{killed_kernel, killed_normalization, MeasureDomain};
use super::{sqrt_2z, ExcursionSpec, TransformEvaluator};
use crate::error::Result;
use crate::inversion::quadrature::{integrate, Domain, GaussianDecay, DEFAULT_TOL};
use crate::special::erfc;

/// Meander-restart density, closed form:
/// `1/(s+D) · { √s/√(2π)·e^{−(y−b)²/(2s)} − ½·(y−b)√D/√(s+D)·e^{−(y−b)²/(2(s+D))}·Erfc((y−b)√D/√(2s(s+D))) }`
/// with `s = u − d`, zero for `u <= d`.
pub fn h_b3_closed(u: f64, y: f64, spec: &ExcursionSpec) -> f64 {
    let s = u - spec.remaining;
    if !(s > 0.0) {
        return 0.0;
    }
    let window = spec.window;
    let c = y - spec.b;
    let total = s + window;
    let gauss = s.sqrt() / (2.0 * PI).sqrt() * (-c * c / (2.0 * s)).exp();
    let tail = 0.5 * c * window.sqrt() / total.sqrt()
        * (-c * c / (2.0 * total)).exp()
        * erfc(c * window.sqrt() / (2.0 * s * total).sqrt());
    (gauss - tail) / total
}

/// Meander-restart density as the Gaussian integral
/// `(1/D)·(1/√(2πs))·∫₀^∞ x·exp(−x²/(2D) − (b−x−y)²/(2s)) dx`, `s = u − d`.
pub fn h_b3_integral(u: f64, y: f64, spec: &ExcursionSpec, tol: f64) -> Result<f64> {
    let s = u - spec.remaining;
    if !(s > 0.0) {
        return Ok(0.0);
    }
    let window = spec.window;
    let c = spec.b - y;
    // Product of two Gaussians in x: centred at c·D/(D+s) with variance D·s/(D+s).
    let total = window + s;
    let decay = GaussianDecay::new((c * window / total).max(0.0), (window * s / total).sqrt());
    let r = integrate(
        |x: f64| x * (-x * x / (2.0 * window) - (c - x) * (c - x) / (2.0 * s)).exp(),
        Domain::Above { start: 0.0, decay },
        tol,
        &[decay.center],
    )?;
    Ok(r.value / (window * (2.0 * PI * s).sqrt()))
}

/// Offsets `u − d` and `y − b` of the grid on which the closed form is checked.
const CHECK_TIMES: [f64; 5] = [0.01, 0.1, 0.5, 1.0, 2.0];
const CHECK_LEVELS: [f64; 5] = [-1.0, -0.3, 0.0, 0.3, 1.0];
const CHECK_TOL: f64 = 1e-6;

/// `h_{b,3}` for one spec, using the closed form only if it agrees with the
/// integral on a check grid.
#[derive(Debug, Clone, Copy)]
pub struct HB3Density {
    spec: ExcursionSpec,
    closed_form_ok: bool,
    max_discrepancy: f64,
}

impl HB3Density {
    pub fn verified(spec: ExcursionSpec) -> Result<Self> {
        let mut max_discrepancy = 0.0f64;
        for s in CHECK_TIMES {
            for c in CHECK_LEVELS {
                let u = spec.remaining + s;
                let y = spec.b + c;
                let diff = (h_b3_closed(u, y, &spec) - h_b3_integral(u, y, &spec, DEFAULT_TOL)?).abs();
                max_discrepancy = max_discrepancy.max(diff);
            }
        }
        let closed_form_ok = max_discrepancy <= CHECK_TOL;
        if !closed_form_ok {
            warn!("h_b3 closed form deviates by {max_discrepancy:e} from its integral; using quadrature");
        }
        Ok(Self {
            spec,
            closed_form_ok,
            max_discrepancy,
        })
    }

    pub fn uses_closed_form(&self) -> bool {
        self.closed_form_ok
    }

    pub fn max_discrepancy(&self) -> f64 {
        self.max_discrepancy
    }

    pub fn eval(&self, u: f64, y: f64) -> Result<f64> {
        if self.closed_form_ok {
            Ok(h_b3_closed(u, y, &self.spec))
        } else {
            h_b3_integral(u, y, &self.spec, DEFAULT_TOL)
        }
    }
}

/// Reflection difference `1_{(d,∞)}(u)·(e^{−y²/(2u)} − e^{−(y−2b)²/(2u)})/√(2πu)`.
pub fn h_b4_closed(u: f64, y: f64, spec: &ExcursionSpec) -> f64 {
    if !(u > spec.remaining) {
        return 0.0;
    }
    let b = spec.b;
    ((-y * y / (2.0 * u)).exp() - (-(y - 2.0 * b) * (y - 2.0 * b) / (2.0 * u)).exp()) / (2.0 * PI * u).sqrt()
}

/// The reflection difference as the convolution it arises from:
/// `(1/√(2πd))·(1/√(2πs))·∫_ℝ e^{−(x−y)²/(2s)}·(e^{−x²/(2d)} − e^{−(x−2b)²/(2d)}) dx`, `s = u − d`.
pub fn h_b4_integral(u: f64, y: f64, spec: &ExcursionSpec, tol: f64) -> Result<f64> {
    let ExcursionSpec { b, remaining: d, .. } = *spec;
    let s = u - d;
    if !(s > 0.0) {
        return Ok(0.0);
    }
    // Each Gaussian product concentrates at the variance-weighted mean of its two centres.
    let scale = (d * s / u).sqrt();
    let near = (y * d) / u;
    let far = (y * d + 2.0 * b * s) / u;
    let lo = GaussianDecay::new(near.min(far), scale).lower_cutoff();
    let hi = GaussianDecay::new(near.max(far), scale).upper_cutoff();
    let r = integrate(
        |x: f64| {
            (-(x - y) * (x - y) / (2.0 * s)).exp()
                * ((-x * x / (2.0 * d)).exp() - (-(x - 2.0 * b) * (x - 2.0 * b) / (2.0 * d)).exp())
        },
        Domain::Interval(lo, hi),
        tol,
        &[near, far],
    )?;
    Ok(r.value / (2.0 * PI * (d * s).sqrt()))
}

/// `e^{−zd}·(1/√(2πd))·∫_ℝ e^{−|x−y|√(2z)} f_{b,d}(x) dx / √(2z)`, the transform of [`h_b4_closed`].
pub fn h_b4_transform(spec: &ExcursionSpec, y: f64, tol: f64) -> TransformEvaluator {
    let ExcursionSpec { b, remaining: d, .. } = *spec;
    TransformEvaluator::delayed(format!("h_b4 transform, b={b}, d={d}, y={y}"), d, move |z| {
        let k = sqrt_2z(z);
        let kernel = killed_kernel(b, d, y, k, MeasureDomain::WholeLine, tol)?;
        Ok(killed_normalization(d) * kernel / k)
    })
}

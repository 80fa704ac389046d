//! The two spatial integrals every density transform is built from.
//!
//! With `k = √(2z)` (principal branch), `e^{−|x−y|k}/k` is the Laplace transform
//! in time of the heat kernel `φ_u(x − y)`; integrating it against the law of
//! the knock-in position gives the transform of the Paris option density.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::Result;
use crate::inversion::quadrature::{integrate, Domain, GaussianDecay};

/// Where the surviving-path measure of the `b > 0` constellation lives.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MeasureDomain {
    /// `x < b`: the reflection-principle density of paths that never reached `b`.
    BelowBarrier,
    /// The whole line, as the closed-form `h_{b,2}`, `h_{b,4}` terms are written.
    WholeLine,
}

/// `∫₀^∞ x·exp(−x²/(2D) − |c − x|·k) dx`; the kink at `x = c` is a split point.
pub fn rayleigh_kernel(c: f64, window: f64, k: Complex64, tol: f64) -> Result<Complex64> {
    let decay = GaussianDecay::new(0.0, window.sqrt());
    let r = integrate(
        |x: f64| x * (-x * x / (2.0 * window) - (c - x).abs() * k).exp(),
        Domain::Above { start: 0.0, decay },
        tol,
        &[c, window.sqrt()],
    )?;
    Ok(r.value)
}

/// `∫ e^{−|x−y|k}·(exp(−x²/(2d)) − exp(−(x−2b)²/(2d))) dx` over `domain`.
pub fn killed_kernel(b: f64, d: f64, y: f64, k: Complex64, domain: MeasureDomain, tol: f64) -> Result<Complex64> {
    let f = |x: f64| {
        let g = (-x * x / (2.0 * d)).exp() - (-(x - 2.0 * b) * (x - 2.0 * b) / (2.0 * d)).exp();
        g * (-(x - y).abs() * k).exp()
    };
    let scale = d.sqrt();
    let splits = [y, 0.0, b];
    let r = match domain {
        MeasureDomain::BelowBarrier => integrate(
            f,
            Domain::Below {
                end: b,
                decay: GaussianDecay::new(0.0, scale),
            },
            tol,
            &splits,
        )?,
        MeasureDomain::WholeLine => {
            let lo = GaussianDecay::new(0.0, scale).lower_cutoff();
            let hi = GaussianDecay::new(2.0 * b, scale).upper_cutoff();
            integrate(f, Domain::Interval(lo, hi), tol, &[y, 0.0, b, 2.0 * b])?
        }
    };
    Ok(r.value)
}

/// `1/√(2πd)`, the normalization of the surviving-path density.
pub fn killed_normalization(d: f64) -> f64 {
    1.0 / (2.0 * PI * d).sqrt()
}

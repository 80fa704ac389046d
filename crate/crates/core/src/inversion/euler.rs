use std::f64::consts::PI;

use num_complex::Complex64;

use super::{InverterConfig, LaplaceInverter, TransformFn};
use crate::error::{Error, Result, Stage};

/// Number of binomially averaged partial sums.
const EULER_ORDER: usize = 11;

/// `ln(10³)`.
const SHIFT_MARGIN: f64 = 6.907_755_278_982_137;

pub const MIN_TERMS: usize = 20;
pub const MAX_TERMS: usize = 60;

/// Fourier-series inversion along the Bromwich line `Re z = A/(2u)` with Euler
/// summation of the alternating tail (Abate–Whitt).
///
/// The discretization error is about `e^{-A}·f(3u)`, so `A` is set three decades
/// below `ln(1/precision_target)` to keep the error relative to `f(u)` near the
/// target when `f` grows over `[u, 3u]`. Round-off grows like `e^{A/2}`.
#[derive(Debug, Clone)]
pub struct EulerSummation {
    terms: usize,
    shift: f64,
    precision: f64,
    binomial: [f64; EULER_ORDER + 1],
}

impl EulerSummation {
    pub fn new(terms: usize, precision_target: f64) -> Result<Self> {
        if !(MIN_TERMS..=MAX_TERMS).contains(&terms) {
            return Err(Error::config(format!(
                "euler-summation needs between {MIN_TERMS} and {MAX_TERMS} contour nodes, got {terms}"
            )));
        }
        if !(precision_target > 0.0 && precision_target < 1.0) {
            return Err(Error::config(format!(
                "precision target must lie in (0, 1), got {precision_target}"
            )));
        }
        let mut binomial = [0.0; EULER_ORDER + 1];
        let mut c = 1.0;
        for (k, slot) in binomial.iter_mut().enumerate() {
            *slot = c / (1u64 << EULER_ORDER) as f64;
            c = c * (EULER_ORDER - k) as f64 / (k + 1) as f64;
        }
        Ok(Self {
            terms,
            shift: -precision_target.ln() + SHIFT_MARGIN,
            precision: precision_target,
            binomial,
        })
    }

    pub fn from_config(config: &InverterConfig) -> Result<Self> {
        Self::new(config.terms, config.precision_target)
    }

    fn euler_mean(&self, partial: &[f64], start: usize) -> f64 {
        self.binomial
            .iter()
            .enumerate()
            .map(|(k, w)| w * partial[start + k])
            .sum()
    }
}

impl LaplaceInverter for EulerSummation {
    fn name(&self) -> &'static str {
        "euler-summation"
    }

    fn nodes(&self) -> usize {
        self.terms
    }

    fn resolution(&self, u: f64) -> f64 {
        2.0 * u / self.terms as f64
    }

    fn invert(&self, transform: &TransformFn<'_>, u: f64) -> Result<f64> {
        if !(u > 0.0 && u.is_finite()) {
            return Err(Error::domain(format!("inversion time must be finite and > 0, got {u}")));
        }
        let a = self.shift;
        let scale = (0.5 * a).exp() / u;
        let head = transform(Complex64::new(a / (2.0 * u), 0.0))?;
        // Partial sums s_0 ..= s_{terms-1}.
        let mut partial = Vec::with_capacity(self.terms);
        let mut running = 0.5 * head.re;
        let mut last_modulus = head.norm();
        let mut peak = 0.0f64;
        partial.push(running * scale);
        for k in 1..self.terms {
            let z = Complex64::new(a, 2.0 * k as f64 * PI) / (2.0 * u);
            let v = transform(z)?;
            if !v.re.is_finite() {
                return Err(Error::numerical(
                    Stage::Inversion,
                    format!("transform not finite at z = {z}"),
                    f64::INFINITY,
                ));
            }
            peak = peak.max(last_modulus);
            last_modulus = v.norm();
            running += if k % 2 == 0 { v.re } else { -v.re };
            partial.push(running * scale);
        }
        // Still rising at the last node: the contour never reached the decaying tail.
        if last_modulus > peak {
            return Err(Error::numerical(
                Stage::Inversion,
                format!(
                    "transform does not decay along the contour at u = {u}: |F| grows from {:e} to {:e}",
                    head.norm(),
                    last_modulus
                ),
                last_modulus,
            ));
        }
        let n = self.terms - EULER_ORDER - 1;
        let value = self.euler_mean(&partial, n);
        let previous = self.euler_mean(&partial, n - 1);

        // s·F(s) on the real axis averages f over times of order 1/s; the
        // second probe keeps the scale meaningful when f vanishes near u.
        let probe = transform(Complex64::new(1.0 / u, 0.0))?;
        let natural = ((a / (2.0 * u)) * head.norm()).max(probe.norm() / u);
        let gap = (value - previous).abs();
        if gap > 1e3 * self.precision * value.abs().max(natural) {
            let tail: Vec<String> = partial[n..].iter().map(|s| format!("{s:.6e}")).collect();
            return Err(Error::numerical(
                Stage::Inversion,
                format!(
                    "euler summation did not settle at u = {u}: successive means {previous:e} and {value:e}; partial sums [{}]",
                    tail.join(", ")
                ),
                gap,
            ));
        }
        Ok(value)
    }
}

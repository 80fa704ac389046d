use num_complex::Complex64;

use super::{InverterConfig, LaplaceInverter, TransformFn};
use crate::error::{Error, Result, Stage};

pub const MIN_TERMS: usize = 8;
pub const MAX_TERMS: usize = 18;
/// Above this many terms double precision starts to lose digits to cancellation.
pub const WARN_TERMS: usize = 14;

/// Gaver–Stehfest inversion. Only evaluates the transform on the positive real
/// axis, which makes it an independent check on the contour method.
#[derive(Debug, Clone)]
pub struct GaverStehfest {
    weights: Vec<f64>,
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

impl GaverStehfest {
    pub fn new(terms: usize) -> Result<Self> {
        if terms % 2 != 0 || !(MIN_TERMS..=MAX_TERMS).contains(&terms) {
            return Err(Error::config(format!(
                "gaver-stehfest needs an even number of terms in {MIN_TERMS}..={MAX_TERMS}, got {terms}"
            )));
        }
        if terms > WARN_TERMS {
            log::warn!("gaver-stehfest with {terms} terms loses accuracy in double precision");
        }
        let half = terms / 2;
        let weights = (1..=terms)
            .map(|k| {
                let lo = (k + 1) / 2;
                let hi = k.min(half);
                let sum: f64 = (lo..=hi)
                    .map(|j| {
                        (j as f64).powi(half as i32) * factorial(2 * j)
                            / (factorial(half - j)
                                * factorial(j)
                                * factorial(j - 1)
                                * factorial(k - j)
                                * factorial(2 * j - k))
                    })
                    .sum();
                if (k + half) % 2 == 0 {
                    sum
                } else {
                    -sum
                }
            })
            .collect();
        Ok(Self { weights })
    }

    pub fn from_config(config: &InverterConfig) -> Result<Self> {
        Self::new(config.terms)
    }
}

impl LaplaceInverter for GaverStehfest {
    fn name(&self) -> &'static str {
        "gaver-stehfest"
    }

    fn nodes(&self) -> usize {
        self.weights.len()
    }

    fn resolution(&self, u: f64) -> f64 {
        u / self.weights.len() as f64
    }

    fn invert(&self, transform: &TransformFn<'_>, u: f64) -> Result<f64> {
        if !(u > 0.0 && u.is_finite()) {
            return Err(Error::domain(format!("inversion time must be finite and > 0, got {u}")));
        }
        let step = std::f64::consts::LN_2 / u;
        let mut sum = 0.0;
        for (i, w) in self.weights.iter().enumerate() {
            let v = transform(Complex64::new(step * (i + 1) as f64, 0.0))?;
            if !v.re.is_finite() {
                return Err(Error::numerical(
                    Stage::Inversion,
                    format!("transform not finite at z = {}", step * (i + 1) as f64),
                    f64::INFINITY,
                ));
            }
            sum += w * v.re;
        }
        Ok(step * sum)
    }
}

//! Special functions used by the exit-time transforms.

mod faddeeva;

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use num_complex::Complex64;

pub use faddeeva::faddeeva;

use crate::error::{Error, Result, Stage};
use crate::inversion::quadrature::{integrate, Domain, DEFAULT_TOL};

/// The transform variable. Both parts are finite for every value this crate returns.
pub type ComplexValue = Complex64;

const SQRT_HALF_PI: f64 = 1.253_314_137_315_500_3;

/// `Ψ(z) = ∫₀^∞ x·exp(−x²/2 + zx) dx = 1 + z·√(π/2)·w(−iz/√2)`.
///
/// The Faddeeva form is the closed form `1 + z·e^{z²/2}·√(2π)·Φ(z)` with the
/// exponential folded into `w`, so it stays finite until `Re(z²)/2` exceeds the
/// double range (roughly `Re(z²) > 1400`), which is reported as a range error.
pub fn psi(z: ComplexValue) -> Result<ComplexValue> {
    let w = faddeeva(Complex64::new(z.im, -z.re) * FRAC_1_SQRT_2);
    let value = 1.0 + z * SQRT_HALF_PI * w;
    if value.re.is_finite() && value.im.is_finite() {
        Ok(value)
    } else {
        Err(Error::Range(format!("psi({z}) overflows")))
    }
}

/// `e^{−z²/2}·Ψ(z) = e^{−z²/2}·(1 − z·√(π/2)·w(iz/√2)) + z·√(2π)`.
///
/// Bounded wherever `Re z >= 0` and `Re(z²) >= 0`, which covers `z = √(2Dζ)` for
/// every `ζ` in the right half-plane. Used to divide out the `e^{−Dζ}` delay of
/// the exit-time law without forming `Ψ` itself.
pub fn psi_scaled(z: ComplexValue) -> Result<ComplexValue> {
    let w = faddeeva(Complex64::new(-z.im, z.re) * FRAC_1_SQRT_2);
    let value = (-0.5 * z * z).exp() * (1.0 - z * SQRT_HALF_PI * w) + z * (2.0 * PI).sqrt();
    if value.re.is_finite() && value.im.is_finite() {
        Ok(value)
    } else {
        Err(Error::Range(format!("scaled psi({z}) is not finite")))
    }
}

pub fn erf(x: f64) -> f64 {
    libm::erf(x)
}

pub fn erfc(x: f64) -> f64 {
    libm::erfc(x)
}

/// Standard normal distribution function.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x * FRAC_1_SQRT_2)
}

/// Density of the first passage time of a standard Brownian motion to level `b > 0`:
/// `b/√(2π) · w^{-3/2} · exp(−b²/(2w))`.
pub fn first_passage_density(b: f64, w: f64) -> Result<f64> {
    if !(b > 0.0) || !(w > 0.0) {
        return Err(Error::domain(format!(
            "first passage density needs b > 0 and w > 0, got b={b}, w={w}"
        )));
    }
    Ok(fp_density(b, w))
}

#[inline]
pub(crate) fn fp_density(b: f64, w: f64) -> f64 {
    if w <= 0.0 {
        return 0.0;
    }
    b / (2.0 * PI).sqrt() * w.powf(-1.5) * (-b * b / (2.0 * w)).exp()
}

/// `∫₀^d e^{−zw} μ_b(dw)`, the Laplace transform of the first passage time
/// restricted to the event that it happens before `d`.
pub fn truncated_fp_transform(b: f64, d: f64, z: ComplexValue) -> Result<ComplexValue> {
    truncated_fp_transform_with_tol(b, d, z, DEFAULT_TOL)
}

pub fn truncated_fp_transform_with_tol(b: f64, d: f64, z: ComplexValue, tol: f64) -> Result<ComplexValue> {
    if !(b > 0.0) || !(d > 0.0) {
        return Err(Error::domain(format!(
            "truncated first passage transform needs b > 0 and d > 0, got b={b}, d={d}"
        )));
    }
    // The density peaks at w = b²/3; splitting there keeps the adaptive rule
    // from wasting effort on the flat start when d is large.
    let peak = b * b / 3.0;
    let r = integrate(
        |w: f64| (-z * w).exp() * fp_density(b, w),
        Domain::Interval(0.0, d),
        tol,
        &[peak, 10.0 * peak],
    )?;
    Ok(r.value)
}

/// `∫_d^∞ e^{−z(w−d)} μ_b(dw)`: the first passage transform beyond `d`, measured from `d`.
///
/// Closed form `½e^{−b²/2d}·(w(iv₋) − w(iv₊))` with `v∓ = (kd ∓ b)/√(2d)`, `k = √(2z)`;
/// so that `e^{−bk} = F(z) + e^{−zd}·T(z)` without cancellation for large `Re z`.
pub fn fp_tail_transform(b: f64, d: f64, z: ComplexValue) -> Result<ComplexValue> {
    if !(b > 0.0) || !(d > 0.0) {
        return Err(Error::domain(format!(
            "first passage tail transform needs b > 0 and d > 0, got b={b}, d={d}"
        )));
    }
    let k = (2.0 * z).sqrt();
    let s = (2.0 * d).sqrt();
    let erfcx = |v: ComplexValue| faddeeva(Complex64::i() * v);
    let value = 0.5 * (-b * b / (2.0 * d)).exp() * (erfcx((k * d - b) / s) - erfcx((k * d + b) / s));
    if !(value.re.is_finite() && value.im.is_finite()) {
        return Err(Error::numerical(
            Stage::Transform,
            format!("first passage tail transform overflowed at z = {z}"),
            f64::INFINITY,
        ));
    }
    Ok(value)
}

/// `Q(T_b > d) = erf(b/√(2d))`: probability that a standard Brownian motion stays below `b` up to `d`.
pub fn survival_probability(b: f64, d: f64) -> Result<f64> {
    if !(b > 0.0) || !(d > 0.0) {
        return Err(Error::domain(format!(
            "survival probability needs b > 0 and d > 0, got b={b}, d={d}"
        )));
    }
    Ok(erf(b / (2.0 * d).sqrt()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::inversion::quadrature::GaussianDecay;

    fn c(re: f64, im: f64) -> ComplexValue {
        Complex64::new(re, im)
    }

    /// Defining integral of Ψ, evaluated by quadrature; independent of the Faddeeva path.
    fn psi_by_quadrature(z: ComplexValue) -> ComplexValue {
        let center = z.re.max(0.0);
        integrate(
            |x: f64| x * (-0.5 * x * x + z * x).exp(),
            Domain::Above {
                start: 0.0,
                decay: GaussianDecay::new(center, 1.0),
            },
            1e-13,
            &[center],
        )
        .unwrap()
        .value
    }

    #[test]
    fn psi_at_zero_is_one() {
        assert_eq!(psi(c(0.0, 0.0)).unwrap(), c(1.0, 0.0));
    }

    #[test]
    fn psi_at_one() {
        // Quadrature of the defining integral on [0, 40].
        let v = psi(c(1.0, 0.0)).unwrap();
        assert!((v.re - 4.477_051_811_703_694).abs() < 1e-12, "{v}");
        assert!(v.im.abs() < 1e-15);
    }

    #[test]
    fn psi_closed_form_matches_defining_integral() {
        let grid = [
            c(0.0, 0.0),
            c(0.5, 0.0),
            c(-0.5, 0.0),
            c(1.0, 0.0),
            c(-1.0, 0.0),
            c(2.0, 0.0),
            c(-2.0, 0.0),
            c(1.0, 1.0),
            c(1.0, -1.0),
            c(0.0, 3.0),
        ];
        for z in grid {
            let closed = psi(z).unwrap();
            let quad = psi_by_quadrature(z);
            let rel = (closed - quad).norm() / quad.norm();
            assert!(rel < 1e-10, "psi({z}): closed {closed} vs quadrature {quad}, rel {rel:e}");
        }
    }

    #[test]
    fn scaled_psi_matches_psi() {
        for z in [c(0.0, 0.0), c(0.5, 0.0), c(1.0, 1.0), c(1.0, -0.9), c(3.0, 0.5), c(0.2, 0.1)] {
            let direct = psi(z).unwrap() * (-0.5 * z * z).exp();
            let scaled = psi_scaled(z).unwrap();
            assert!((direct - scaled).norm() <= 1e-13 * direct.norm().max(1.0), "{z}: {direct} vs {scaled}");
        }
    }

    #[test]
    fn scaled_psi_stays_finite_where_psi_overflows() {
        let z = c(60.0, 5.0);
        assert!(psi(z).is_err());
        let v = psi_scaled(z).unwrap();
        // Leading behaviour z·√(2π).
        assert!((v / (z * (2.0 * PI).sqrt()) - 1.0).norm() < 1e-3, "{v}");
    }

    #[test]
    fn psi_conjugate_symmetry() {
        for z in [c(1.0, 1.0), c(0.3, 2.5), c(4.0, -0.7), c(0.01, 30.0)] {
            let a = psi(z.conj()).unwrap();
            let b = psi(z).unwrap().conj();
            assert!((a - b).norm() <= 1e-14 * b.norm(), "{z}");
        }
    }

    #[test]
    fn psi_has_no_zeros_on_right_half_plane_grid() {
        for re in [0.05, 0.5, 1.0, 3.0, 8.0] {
            for im in [-20.0, -3.0, -0.5, 0.0, 0.5, 3.0, 20.0] {
                let v = psi(c(re, im)).unwrap();
                assert!(v.norm() > 1e-3, "psi({re}+{im}i) = {v}");
            }
        }
    }

    #[test]
    fn psi_overflow_is_a_range_error() {
        assert!(matches!(psi(c(60.0, 0.0)), Err(Error::Range(_))));
    }

    #[test]
    fn error_functions() {
        assert_eq!(erf(0.0), 0.0);
        assert_eq!(erfc(0.0), 1.0);
        assert!((erf(1.0) - 0.842_700_792_949_714_9).abs() < 1e-15);
        assert_eq!(erf(-0.7), -erf(0.7));
        for x in [-3.0, -0.4, 0.0, 0.2, 1.5, 5.0] {
            assert!((erf(x) + erfc(x) - 1.0).abs() < 1e-15);
        }
        assert!((normal_cdf(0.0) - 0.5).abs() < 1e-16);
        assert!((normal_cdf(1.959_963_984_540_054) - 0.975).abs() < 1e-15);
    }

    #[test]
    fn erf_matches_series_oracle() {
        // Maclaurin series 2/√π Σ (−1)^n x^{2n+1} / (n!(2n+1)), summed with enough terms.
        for x in [0.1, 0.5, 1.0, 1.7, 2.5] {
            let mut term = x;
            let mut sum = x;
            for n in 1..200 {
                term *= -x * x / n as f64;
                sum += term / (2 * n + 1) as f64;
            }
            let series = sum * 2.0 / PI.sqrt();
            assert!((erf(x) - series).abs() < 1e-14, "x={x}");
        }
    }

    #[test]
    fn first_passage_density_values() {
        let v = first_passage_density(1.0, 1.0).unwrap();
        assert!((v - 0.241_970_724_519_143_37).abs() < 1e-15);
        assert!(first_passage_density(0.0, 1.0).is_err());
        assert!(first_passage_density(1.0, 0.0).is_err());
        assert!(first_passage_density(1.0, 1e-3).unwrap() < 1e-200);
    }

    #[test]
    fn first_passage_density_has_unit_mass() {
        // Substitute w = b²/s² to turn the heavy tail into a Gaussian integral over s.
        let b: f64 = 0.7;
        let head = integrate(|w: f64| fp_density(b, w), Domain::Interval(0.0, 1.0), 1e-13, &[b * b / 3.0])
            .unwrap()
            .value;
        let tail = integrate(
            |s: f64| fp_density(b, b * b / (s * s)) * 2.0 * b * b / (s * s * s),
            Domain::Interval(1e-300, b),
            1e-13,
            &[],
        )
        .unwrap()
        .value;
        assert!((head + tail - 1.0).abs() < 1e-8, "{}", head + tail);
    }

    #[test]
    fn truncated_transform_at_zero_is_hit_probability() {
        let (b, d) = (0.3, 0.1);
        let v = truncated_fp_transform(b, d, c(0.0, 0.0)).unwrap();
        assert!((v.re - erfc(b / (2.0 * d).sqrt())).abs() < 1e-12, "{v}");
        assert!((v.re - 0.342_781_711_147_911_4).abs() < 1e-12);
    }

    #[test]
    fn truncated_transform_approaches_full_transform() {
        let (b, z) = (0.3, c(1.0, 0.0));
        let v = truncated_fp_transform(b, 50.0, z).unwrap();
        let full = (-b * (2.0f64).sqrt()).exp();
        assert!((v.re - full).abs() < 1e-10, "{v} vs {full}");
    }

    #[test]
    fn truncated_transform_vanishes_for_tiny_d() {
        let v = truncated_fp_transform(0.3, 1e-4, c(1.0, 0.0)).unwrap();
        assert!(v.norm() < 1e-100);
    }

    #[test]
    fn truncated_transform_bounds_and_monotonicity() {
        let b = 0.4;
        let mut last = 0.0;
        for d in [0.01, 0.05, 0.1, 0.5, 2.0] {
            let v = truncated_fp_transform(b, d, c(0.7, 0.0)).unwrap();
            assert!(v.norm() >= last);
            last = v.norm();
            let w = truncated_fp_transform(b, d, c(0.7, 5.0)).unwrap();
            assert!(w.norm() <= erfc(b / (2.0 * d).sqrt()) + 1e-14);
            assert!(w.norm() < 1.0);
        }
    }

    #[test]
    fn tail_transform_matches_quadrature() {
        let (b, d) = (0.3, 0.1);
        for z in [c(0.5, 0.0), c(2.0, 3.0), c(20.0, -40.0), c(80.0, 900.0)] {
            let want = integrate(
                |w: f64| (-z * (w - d)).exp() * fp_density(b, w),
                Domain::Interval(d, d + 80.0 / z.re),
                1e-13,
                &[],
            )
            .unwrap()
            .value;
            let got = fp_tail_transform(b, d, z).unwrap();
            assert!((got - want).norm() < 1e-10 * want.norm().max(1e-3), "{z}: {got} vs {want}");
            let whole = (-b * (2.0 * z).sqrt()).exp();
            let split = truncated_fp_transform_with_tol(b, d, z, 1e-13).unwrap() + (-z * d).exp() * got;
            assert!((split - whole).norm() < 1e-12, "{z}: {split} vs {whole}");
        }
    }

    #[test]
    fn tail_transform_is_finite_far_out() {
        let v = fp_tail_transform(0.25, 0.04, c(500.0, 20000.0)).unwrap();
        assert!(v.norm().is_finite() && v.norm() < 1.0);
        assert!(fp_tail_transform(0.0, 0.1, c(1.0, 0.0)).is_err());
    }

    #[test]
    fn survival_probability_values() {
        let p = survival_probability(0.3, 0.1).unwrap();
        assert!((p - 0.657_218_288_852_088_6).abs() < 1e-15);
        let hit = truncated_fp_transform(0.3, 0.1, c(0.0, 0.0)).unwrap().re;
        assert!((p + hit - 1.0).abs() < 1e-12);
        assert_eq!(survival_probability(50.0, 0.01).unwrap(), 1.0);
        assert!(survival_probability(-0.1, 0.1).is_err());
    }
}

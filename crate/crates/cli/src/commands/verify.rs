//! Analytical values against simulation; a check passes when `|z| <= 3`.

use std::io::Write;

use clap::ValueEnum;
use num_complex::Complex64;
use parisian::mc::{mc_exit_time_transforms, mc_hb_lemma_estimates, mc_price, McComplexEstimate, PathConfig};
use parisian::model::derive_params;
use parisian::pricing::paris_down_in_call;
use parisian::special::psi;
use parisian::transforms::{exit_time_transform, form_registry, ExcursionSpec};
use serde_json::json;

use crate::config::RunConfig;
use crate::error::CliError;
use crate::Format;

pub const MAX_Z: f64 = 3.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Suite {
    /// `E[e^{−zH₀}]·Ψ(√(2Dz)) = 1` for a fresh excursion from the barrier.
    KeyRelation,
    /// Exit-time and density transforms of the configured contract.
    Transforms,
    /// Down-and-in price of the configured contract.
    Price,
}

impl Suite {
    fn name(self) -> &'static str {
        match self {
            Suite::KeyRelation => "key-relation",
            Suite::Transforms => "transforms",
            Suite::Price => "price",
        }
    }
}

#[derive(Debug, Clone)]
struct Check {
    name: String,
    analytic: f64,
    mc: f64,
    std_error: f64,
    z: f64,
}

impl Check {
    fn new(name: String, analytic: f64, mc: f64, std_error: f64) -> Self {
        let diff = analytic - mc;
        let z = if std_error > 0.0 {
            diff / std_error
        } else if diff.abs() <= 1e-12 {
            0.0
        } else {
            f64::INFINITY.copysign(diff)
        };
        Self {
            name,
            analytic,
            mc,
            std_error,
            z,
        }
    }

    fn pass(&self) -> bool {
        self.z.abs() <= MAX_Z
    }
}

fn complex_checks(label: &str, analytic: Complex64, e: &McComplexEstimate) -> [Check; 2] {
    [
        Check::new(format!("{label} re"), analytic.re, e.mean.re, e.std_error.re),
        Check::new(format!("{label} im"), analytic.im, e.mean.im, e.std_error.im),
    ]
}

const TRANSFORM_ZS: [(f64, f64); 4] = [(0.5, 0.0), (1.0, 0.0), (1.0, 1.0), (2.0, 0.0)];
const DENSITY_YS: [f64; 2] = [0.0, 0.1];

fn key_relation(config: &RunConfig, paths: &PathConfig) -> Result<Vec<Check>, CliError> {
    let window = config.contract.window;
    let spec = ExcursionSpec::fresh(0.0, window)?;
    let zs: Vec<Complex64> = [0.5, 1.0, 2.0, 5.0].iter().map(|&z| Complex64::new(z, 0.0)).collect();
    let est = mc_exit_time_transforms(&spec, &zs, paths, None)?;
    zs.iter()
        .zip(&est)
        .map(|(z, e)| {
            let p = psi(Complex64::new((2.0 * window * z.re).sqrt(), 0.0))?.re;
            Ok(Check::new(format!("E[exp(-zH)]*psi z={}", z.re), 1.0, e.mean.re * p, e.std_error.re * p))
        })
        .collect()
}

fn transforms(config: &RunConfig, paths: &PathConfig) -> Result<Vec<Check>, CliError> {
    let spec = ExcursionSpec::from_params(&derive_params(&config.market, &config.contract)?)?;
    let zs: Vec<Complex64> = TRANSFORM_ZS.iter().map(|&(re, im)| Complex64::new(re, im)).collect();
    let mut checks = Vec::new();
    let exit = mc_exit_time_transforms(&spec, &zs, paths, None)?;
    for (z, e) in zs.iter().zip(&exit) {
        checks.extend(complex_checks(&format!("exit z={z}"), exit_time_transform(&spec, *z)?, e));
    }
    let form = form_registry().select(&spec, &config.numerics.positive_form)?;
    for y in DENSITY_YS {
        let ev = form.evaluator(&spec, y, config.numerics.quad_tol)?;
        let est = mc_hb_lemma_estimates(&spec, y, &zs, paths, None)?;
        for (z, e) in zs.iter().zip(&est) {
            checks.extend(complex_checks(&format!("{} y={y} z={z}", form.name()), ev.eval(*z)?, e));
        }
    }
    Ok(checks)
}

fn price(config: &RunConfig, paths: &PathConfig) -> Result<Vec<Check>, CliError> {
    let analytic = paris_down_in_call(&config.market, &config.contract, &config.numerics)?;
    let mc = mc_price(&config.market, &config.contract, paths)?;
    Ok(vec![Check::new("down-and-in call".into(), analytic.value, mc.mean, mc.std_error)])
}

pub fn run(config: &RunConfig, suite: Suite, format: Format, out: &mut dyn Write) -> Result<(), CliError> {
    let paths = config.mc.path_config()?;
    let checks = match suite {
        Suite::KeyRelation => key_relation(config, &paths)?,
        Suite::Transforms => transforms(config, &paths)?,
        Suite::Price => price(config, &paths)?,
    };
    let failed = checks.iter().filter(|c| !c.pass()).count();
    report(suite, &paths, &checks, failed, format, out).map_err(|e| CliError::io("writing the report", e))?;
    if failed > 0 {
        return Err(CliError::Verify(format!(
            "{failed} of {} checks in suite {} exceed |z| = {MAX_Z}",
            checks.len(),
            suite.name()
        )));
    }
    Ok(())
}

fn report(
    suite: Suite,
    paths: &PathConfig,
    checks: &[Check],
    failed: usize,
    format: Format,
    out: &mut dyn Write,
) -> std::io::Result<()> {
    match format {
        Format::Text => {
            writeln!(
                out,
                "suite {}: {} paths, seed {}, scheme {}, {} steps per unit time",
                suite.name(),
                paths.paths,
                paths.seed,
                paths.scheme,
                paths.steps_per_unit_time
            )?;
            for c in checks {
                writeln!(
                    out,
                    "{}  {:<32} analytic {:<22} mc {:<22} se {:<10.3e} z {:+.2}",
                    if c.pass() { "PASS" } else { "FAIL" },
                    c.name,
                    c.analytic,
                    c.mc,
                    c.std_error,
                    c.z
                )?;
            }
            let verdict = if failed == 0 { "PASS" } else { "FAIL" };
            writeln!(out, "{verdict} {} ({} of {} checks passed)", suite.name(), checks.len() - failed, checks.len())
        }
        Format::JsonLines => {
            for c in checks {
                let line = json!({
                    "suite": suite.name(),
                    "check": c.name,
                    "analytic": c.analytic,
                    "mc": c.mc,
                    "std_error": c.std_error,
                    "z": if c.z.is_finite() { json!(c.z) } else { json!(c.z.to_string()) },
                    "pass": c.pass(),
                });
                writeln!(out, "{line}")?;
            }
            let summary = json!({
                "suite": suite.name(),
                "checks": checks.len(),
                "failed": failed,
                "pass": failed == 0,
                "paths": paths.paths,
                "seed": paths.seed,
                "scheme": paths.scheme,
            });
            writeln!(out, "{summary}")
        }
    }
}

//! Run configuration: a flat `key = value` file with dotted section prefixes.
//!
//! ```text
//! # comments and blank lines are ignored
//! market.spot = 100
//! contract.window = 0.05
//! ```
//!
//! `--set key=value` overrides are applied after the file, in order.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use parisian::inversion::InverterConfig;
use parisian::mc::PathConfig;
use parisian::pricing::NumericsConfig;
use parisian::{MarketParams, ParisianContract};

use crate::error::CliError;

/// Every key the parser accepts, in dump order.
pub const KEYS: &[&str] = &[
    "market.spot",
    "market.rate",
    "market.dividend",
    "market.volatility",
    "contract.strike",
    "contract.barrier",
    "contract.window",
    "contract.maturity",
    "contract.elapsed",
    "numerics.method",
    "numerics.terms",
    "numerics.precision",
    "numerics.quad_tol",
    "numerics.outer_tol",
    "numerics.form",
    "mc.paths",
    "mc.steps_per_unit_time",
    "mc.seed",
    "mc.antithetic",
    "mc.scheme",
];

/// Simulation settings; the seed has no default.
#[derive(Debug, Clone, PartialEq)]
pub struct McSettings {
    pub paths: usize,
    pub steps_per_unit_time: usize,
    pub seed: Option<u64>,
    pub antithetic: bool,
    pub scheme: String,
}

impl Default for McSettings {
    fn default() -> Self {
        let d = PathConfig::default();
        Self {
            paths: d.paths,
            steps_per_unit_time: d.steps_per_unit_time,
            seed: None,
            antithetic: d.antithetic,
            scheme: d.scheme,
        }
    }
}

impl McSettings {
    /// The path configuration, validated; simulation needs an explicit `mc.seed`.
    pub fn path_config(&self) -> Result<PathConfig, CliError> {
        let seed = self
            .seed
            .ok_or_else(|| CliError::input("missing required field `mc.seed` (simulation needs an explicit seed)"))?;
        let config = PathConfig {
            paths: self.paths,
            steps_per_unit_time: self.steps_per_unit_time,
            seed,
            antithetic: self.antithetic,
            scheme: self.scheme.clone(),
        };
        config.validate()?;
        Ok(config)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub market: MarketParams,
    pub contract: ParisianContract,
    pub numerics: NumericsConfig,
    pub mc: McSettings,
}

/// Raw entries with where each came from, for error messages.
#[derive(Debug, Default)]
struct Entries {
    values: BTreeMap<String, (String, String)>,
}

impl Entries {
    fn insert(&mut self, key: &str, value: &str, origin: String, allow_repeat: bool) -> Result<(), CliError> {
        if !KEYS.contains(&key) {
            return Err(CliError::input(format!("{origin}: unknown key `{key}`")));
        }
        if !allow_repeat {
            if let Some((_, first)) = self.values.get(key) {
                return Err(CliError::input(format!("{origin}: `{key}` already set at {first}")));
            }
        }
        self.values.insert(key.to_string(), (value.to_string(), origin));
        Ok(())
    }

    fn parse_text(&mut self, text: &str, source: &str) -> Result<(), CliError> {
        for (n, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let origin = format!("{source}:{}", n + 1);
            let (key, value) = split_assignment(line).ok_or_else(|| {
                CliError::input(format!("{origin}: expected `key = value`, got `{line}`"))
            })?;
            self.insert(key, value, origin, false)?;
        }
        Ok(())
    }

    fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>, CliError> {
        match self.values.get(key) {
            None => Ok(None),
            Some((raw, origin)) => raw.parse().map(Some).map_err(|_| {
                CliError::input(format!("{origin}: cannot parse `{raw}` as a value for `{key}`"))
            }),
        }
    }

    fn require<T: FromStr>(&self, key: &str) -> Result<T, CliError> {
        self.get(key)?
            .ok_or_else(|| CliError::input(format!("missing required field `{key}`")))
    }

    fn or<T: FromStr>(&self, key: &str, default: T) -> Result<T, CliError> {
        Ok(self.get(key)?.unwrap_or(default))
    }
}

fn split_assignment(line: &str) -> Option<(&str, &str)> {
    let (key, value) = line.split_once('=')?;
    let (key, value) = (key.trim(), value.trim());
    (!key.is_empty() && !value.is_empty()).then_some((key, value))
}

impl RunConfig {
    /// Reads `path` and applies `overrides`, each `key=value`.
    pub fn load(path: &Path, overrides: &[String]) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::input(format!("cannot read config `{}`: {e}", path.display())))?;
        Self::parse(&text, &path.display().to_string(), overrides)
    }

    pub fn parse(text: &str, source: &str, overrides: &[String]) -> Result<Self, CliError> {
        let mut entries = Entries::default();
        entries.parse_text(text, source)?;
        for o in overrides {
            let (key, value) = split_assignment(o)
                .ok_or_else(|| CliError::input(format!("--set expects `key=value`, got `{o}`")))?;
            entries.insert(key, value, format!("--set {o}"), true)?;
        }
        Self::from_entries(&entries)
    }

    fn from_entries(e: &Entries) -> Result<Self, CliError> {
        let market = MarketParams {
            spot: e.require("market.spot")?,
            rate: e.require("market.rate")?,
            dividend: e.or("market.dividend", 0.0)?,
            volatility: e.require("market.volatility")?,
        };
        let contract = ParisianContract {
            strike: e.require("contract.strike")?,
            barrier: e.require("contract.barrier")?,
            window: e.require("contract.window")?,
            time_to_maturity: e.require("contract.maturity")?,
            elapsed_age: e.or("contract.elapsed", 0.0)?,
        };
        let defaults = NumericsConfig::default();
        let numerics = NumericsConfig {
            inverter: InverterConfig {
                method: e.or("numerics.method", defaults.inverter.method)?,
                terms: e.or("numerics.terms", defaults.inverter.terms)?,
                precision_target: e.or("numerics.precision", defaults.inverter.precision_target)?,
            },
            quad_tol: e.or("numerics.quad_tol", defaults.quad_tol)?,
            outer_tol: e.or("numerics.outer_tol", defaults.outer_tol)?,
            positive_form: e.or("numerics.form", defaults.positive_form)?,
        };
        let d = McSettings::default();
        let mc = McSettings {
            paths: e.or("mc.paths", d.paths)?,
            steps_per_unit_time: e.or("mc.steps_per_unit_time", d.steps_per_unit_time)?,
            seed: e.get("mc.seed")?,
            antithetic: e.or("mc.antithetic", d.antithetic)?,
            scheme: e.or("mc.scheme", d.scheme)?,
        };
        parisian::model::validate(&market, &contract)?;
        numerics.validate()?;
        numerics.inverter.build()?;
        Ok(Self {
            market,
            contract,
            numerics,
            mc,
        })
    }

    /// The effective configuration in the input format; it parses back to `self`.
    pub fn dump(&self) -> String {
        let (m, c, n, mc) = (&self.market, &self.contract, &self.numerics, &self.mc);
        let mut out = String::from("# effective configuration\n");
        let mut put = |key: &str, value: String| {
            let _ = writeln!(out, "{key} = {value}");
        };
        put("market.spot", format!("{:?}", m.spot));
        put("market.rate", format!("{:?}", m.rate));
        put("market.dividend", format!("{:?}", m.dividend));
        put("market.volatility", format!("{:?}", m.volatility));
        put("contract.strike", format!("{:?}", c.strike));
        put("contract.barrier", format!("{:?}", c.barrier));
        put("contract.window", format!("{:?}", c.window));
        put("contract.maturity", format!("{:?}", c.time_to_maturity));
        put("contract.elapsed", format!("{:?}", c.elapsed_age));
        put("numerics.method", n.inverter.method.clone());
        put("numerics.terms", n.inverter.terms.to_string());
        put("numerics.precision", format!("{:?}", n.inverter.precision_target));
        put("numerics.quad_tol", format!("{:?}", n.quad_tol));
        put("numerics.outer_tol", format!("{:?}", n.outer_tol));
        put("numerics.form", n.positive_form.clone());
        put("mc.paths", mc.paths.to_string());
        put("mc.steps_per_unit_time", mc.steps_per_unit_time.to_string());
        if let Some(seed) = mc.seed {
            put("mc.seed", seed.to_string());
        }
        put("mc.antithetic", mc.antithetic.to_string());
        put("mc.scheme", mc.scheme.clone());
        out
    }
}

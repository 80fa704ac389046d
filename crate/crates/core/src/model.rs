//! Market and contract description, validation, and the reduction to normalized
//! Brownian coordinates.
//!
//! With `W*(u) = log(S_{t+u}/S_t) / σ` the price stays below the barrier exactly
//! when `W*` stays below `b = log(L/S_t) / σ`, and the call finishes in the money
//! exactly when `W*(τ) > β = log(K/S_t) / σ`. Under the drift-removing measure
//! `W*` is a standard Brownian motion and all of the excursion analysis happens
//! in these coordinates.

use crate::error::{Error, Result};

/// Black–Scholes market constants. Times are year fractions, rates are
/// continuously compounded and annualized.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MarketParams {
    pub spot: f64,
    pub rate: f64,
    pub dividend: f64,
    pub volatility: f64,
}

/// A Parisian down-and-in call, observed at a time when it has not yet knocked in.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParisianContract {
    pub strike: f64,
    pub barrier: f64,
    /// Required length `D` of a single uninterrupted stay below the barrier.
    pub window: f64,
    pub time_to_maturity: f64,
    /// Age of the excursion below the barrier that is in progress today; zero if none.
    pub elapsed_age: f64,
}

/// Which side of the barrier today's spot sits on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Constellation {
    /// `spot >= barrier`, i.e. `b <= 0`: a full window `D` must still be spent below.
    AtOrAbove,
    /// `spot < barrier`, i.e. `b > 0`: an excursion is running and needs `d` more time.
    Below,
}

/// Reduced coordinates of a valuation problem.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DerivedParams {
    /// Drift of `W*` under the risk-neutral measure, `(r − δ − σ²/2)/σ`.
    pub varpi: f64,
    /// Normalized log-barrier `log(L/S)/σ`; `-inf` for a zero barrier.
    pub b: f64,
    /// Normalized log-strike `log(K/S)/σ`.
    pub beta: f64,
    /// Remaining excursion time needed to knock in, `D − elapsed_age`.
    pub d: f64,
    pub window: f64,
    pub tau: f64,
}

impl DerivedParams {
    pub fn constellation(&self) -> Constellation {
        if self.b > 0.0 {
            Constellation::Below
        } else {
            Constellation::AtOrAbove
        }
    }

    /// The time below which the knock-in cannot have happened: `D` for `b <= 0`, `d` otherwise.
    pub fn threshold(&self) -> f64 {
        match self.constellation() {
            Constellation::AtOrAbove => self.window,
            Constellation::Below => self.d,
        }
    }
}

fn require(cond: bool, msg: &str) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(Error::domain(msg))
    }
}

impl MarketParams {
    pub fn validate(&self) -> Result<()> {
        require(self.spot.is_finite() && self.spot > 0.0, "market.spot must be finite and > 0")?;
        require(self.rate.is_finite() && self.rate > 0.0, "market.rate must be finite and > 0")?;
        require(
            self.dividend.is_finite() && self.dividend >= 0.0,
            "market.dividend must be finite and >= 0",
        )?;
        require(
            self.volatility.is_finite() && self.volatility > 0.0,
            "market.volatility must be finite and > 0",
        )
    }
}

impl ParisianContract {
    pub fn validate(&self) -> Result<()> {
        require(self.strike.is_finite() && self.strike > 0.0, "contract.strike must be finite and > 0")?;
        require(
            self.barrier.is_finite() && self.barrier >= 0.0,
            "contract.barrier must be finite and >= 0",
        )?;
        require(self.window.is_finite() && self.window > 0.0, "contract.window must be finite and > 0")?;
        require(
            self.time_to_maturity.is_finite() && self.time_to_maturity > 0.0,
            "contract.maturity must be finite and > 0",
        )?;
        require(
            self.elapsed_age.is_finite() && self.elapsed_age >= 0.0,
            "contract.elapsed must be finite and >= 0",
        )?;
        require(
            self.elapsed_age < self.window,
            "contract.elapsed must be < contract.window (the option would already be knocked in)",
        )
    }
}

/// Checks every invariant of the market and the contract, including the
/// cross-invariant that an excursion can only be in progress below the barrier.
pub fn validate(market: &MarketParams, contract: &ParisianContract) -> Result<()> {
    market.validate()?;
    contract.validate()?;
    if contract.elapsed_age > 0.0 && market.spot >= contract.barrier {
        return Err(Error::domain(
            "contract.elapsed > 0 requires market.spot < contract.barrier (no excursion can be in progress at or above the barrier)",
        ));
    }
    Ok(())
}

pub fn derive_params(market: &MarketParams, contract: &ParisianContract) -> Result<DerivedParams> {
    validate(market, contract)?;
    let sigma = market.volatility;
    let b = if contract.barrier == 0.0 {
        f64::NEG_INFINITY
    } else {
        (contract.barrier / market.spot).ln() / sigma
    };
    Ok(DerivedParams {
        varpi: (market.rate - market.dividend - 0.5 * sigma * sigma) / sigma,
        b,
        beta: (contract.strike / market.spot).ln() / sigma,
        d: contract.window - contract.elapsed_age,
        window: contract.window,
        tau: contract.time_to_maturity,
    })
}

//! Pricing of Paris (Parisian) barrier options through Laplace transforms in time
//! of the knock-in density, with a path-level Monte Carlo reference.

pub mod error;
pub mod inversion;
pub mod mc;
pub mod model;
pub mod pricing;
pub mod special;
pub mod transforms;

pub use error::{Error, Result, Stage};
pub use model::{derive_params, Constellation, DerivedParams, MarketParams, ParisianContract};

use std::fmt;

/// Errors raised by the valuation engine.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// An input violates a documented invariant.
    #[error("domain error: {0}")]
    Domain(String),

    /// A special function was asked for a value outside its representable range.
    #[error("range error: {0}")]
    Range(String),

    /// A numerical stage (quadrature, inversion) failed to reach its target.
    #[error("numerical error in {stage}: {detail} (achieved {achieved:e})")]
    Numerical {
        stage: Stage,
        detail: String,
        achieved: f64,
    },

    /// A configuration is malformed or out of its admissible range.
    #[error("configuration error: {0}")]
    Config(String),
}

/// The pipeline stage where a numerical failure happened.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Quadrature,
    Inversion,
    Transform,
    Pricing,
    Density,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Stage::Quadrature => "quadrature",
            Stage::Inversion => "laplace inversion",
            Stage::Transform => "transform evaluation",
            Stage::Pricing => "pricing",
            Stage::Density => "density",
        };
        f.write_str(name)
    }
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub(crate) fn numerical(stage: Stage, detail: impl Into<String>, achieved: f64) -> Self {
        Error::Numerical {
            stage,
            detail: detail.into(),
            achieved,
        }
    }

    /// Prefixes the detail of a numerical error with extra context, leaving other kinds untouched.
    pub fn with_context(self, stage: Stage, context: impl fmt::Display) -> Self {
        match self {
            Error::Numerical {
                stage: inner,
                detail,
                achieved,
            } => Error::Numerical {
                stage,
                detail: format!("{context}: {inner}: {detail}"),
                achieved,
            },
            other => other,
        }
    }

    /// True for input-validation failures, as opposed to numerical ones.
    pub fn is_input_error(&self) -> bool {
        matches!(self, Error::Domain(_) | Error::Config(_))
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

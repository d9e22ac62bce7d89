use std::path::PathBuf;

use thiserror::Error;

/// Which edge of the no-arbitrage premium band a quote violated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BandSide {
    /// Premium at or below intrinsic value.
    Lower,
    /// Premium at or above `min(K, F)` plus intrinsic value.
    Upper,
}

impl std::fmt::Display for BandSide {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            BandSide::Lower => f.write_str("at or below intrinsic value"),
            BandSide::Upper => f.write_str("at or above the maximum option value"),
        }
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {what} (got {value})")]
    Domain { what: &'static str, value: f64 },

    #[error("premium {premium} is {side}: band is ({lower}, {upper})")]
    BandViolation {
        side: BandSide,
        premium: f64,
        lower: f64,
        upper: f64,
    },

    #[error("invalid quote: {0}")]
    InvalidQuote(&'static str),

    #[error("invalid solver configuration: {0}")]
    InvalidConfig(&'static str),

    #[error("bisection bracket [{lo}, {hi}] does not contain the root for c={c}, k={k}")]
    BracketFailure { c: f64, k: f64, lo: f64, hi: f64 },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("unknown figure {0:?}; expected price-shapes, bounds-vs-price or bounds-vs-k")]
    UnknownFigure(String),

    #[error("{path}: {message}")]
    GridFile { path: PathBuf, message: String },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain(what: &'static str, value: f64) -> Error {
    Error::Domain { what, value }
}

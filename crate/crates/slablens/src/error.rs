//! Error types shared across the library.
//!
//! Every fallible operation returns [`Result`] with a dedicated variant so
//! callers (and the CLI exit-code mapping) can distinguish configuration
//! mistakes from numeric conditions discovered at run time.

use thiserror::Error;

/// Library-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

/// Errors produced by model construction, evaluation, and verification.
#[derive(Debug, Error)]
pub enum Error {
    /// A parameter violates a structural precondition (wrong sign, range,
    /// infeasible exponent/coefficient pair, point outside its region, ...).
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// The loss parameter is too large for the requested quantity; carries
    /// the offending value so callers can report how far out of range it is.
    #[error("delta too large: {context} (value {value:e})")]
    DeltaTooLarge {
        /// What was being computed when the gate tripped.
        context: &'static str,
        /// The offending quantity (for the resonance wavenumber this is the
        /// non-positive value the formula produced).
        value: f64,
    },

    /// A bound or certificate is only valid below a threshold that the
    /// current configuration exceeds.
    #[error("not applicable: {0}")]
    NotApplicable(String),

    /// The decay-rate preconditions of the four-term upper bound fail
    /// (the third term's tail integral diverges).
    #[error("upper-bound chain not applicable: {0}")]
    ChainNotApplicable(String),

    /// Adaptive quadrature exhausted its panel budget before reaching the
    /// requested tolerance; carries what was achieved.
    #[error("integration did not converge: achieved {achieved:e}, requested {requested:e}")]
    Integration {
        /// Relative error estimate actually reached.
        achieved: f64,
        /// Relative tolerance that was requested.
        requested: f64,
    },

    /// A run-configuration file could not be parsed or failed validation.
    #[error("config error: {0}")]
    Config(String),

    /// Grid-source ingestion failed (format, non-finite entries, or a net
    /// charge too large to repair).
    #[error("source data error: {0}")]
    SourceData(String),

    /// Filesystem failure while reading or writing artifacts.
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Convenience constructor for [`Error::InvalidParameter`].
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }
}

//! Crate-wide error type.
//!
//! Every fallible operation in the library returns [`Error`]. Variants are
//! grouped by the layer that raises them: simulation engine, gain laws,
//! certificate machinery, and the scenario harness. The CLI maps these onto
//! process exit codes, so variant identity (not just the message) is part of
//! the public contract.

use thiserror::Error;

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;

/// All errors produced by this crate.
#[derive(Debug, Error)]
pub enum Error {
    // =====================================================================
    // Simulation engine
    // =====================================================================
    /// A flow step was requested that leaves the flow domain: negative,
    /// NaN, or longer than the time remaining on the countdown timer.
    #[error("flow domain violation: {0}")]
    FlowDomainViolation(String),

    /// A jump was requested while the countdown timer had not expired.
    #[error("not in jump set: timer has {remaining} remaining")]
    NotInJumpSet { remaining: f64 },

    /// The discrete state is outside its range (event counter not in 0..=5,
    /// mode bit not in {0, 1}).
    #[error("corrupt phase: {0}")]
    CorruptPhase(String),

    /// Scalar parameters are out of range (requires 0 < c <= d and mu > 0,
    /// all finite).
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    // =====================================================================
    // Gain laws
    // =====================================================================
    /// The rate-correction law was evaluated with a non-positive or
    /// non-finite gain.
    #[error("invalid gain: mu = {mu} (must be finite and > 0)")]
    InvalidGain { mu: f64 },

    // =====================================================================
    // Certificate machinery
    // =====================================================================
    /// A certificate operation received a matrix that is not symmetric
    /// positive definite, or otherwise malformed certificate data.
    #[error("invalid certificate input: {0}")]
    InvalidCertificateInput(String),

    /// No positive definite certificate exists for the requested parameters
    /// (the per-round error contraction `|1 - mu*gamma2| < 1` fails).
    #[error("infeasible: {0}")]
    Infeasible(String),

    /// An operation that requires a valid contraction certificate was called
    /// without one (or with one whose contraction check failed).
    #[error("no certificate: {0}")]
    NoCertificate(String),

    // =====================================================================
    // Harness
    // =====================================================================
    /// A scenario configuration failed validation; the message names the
    /// offending field or constraint.
    #[error("invalid config: {0}")]
    ConfigInvalid(String),

    /// Trajectory and certificate passed to the verifier do not describe the
    /// same system (mismatched parameters or unsupported trajectory layout).
    #[error("verify input mismatch: {0}")]
    VerifyInputMismatch(String),

    /// Underlying I/O failure (missing file, unreadable path, ...).
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    /// Malformed CSV while reading a trajectory.
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    /// Malformed JSON while reading a certificate.
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn display_messages_name_the_failure() {
        let e = Error::NotInJumpSet { remaining: 0.25 };
        assert_eq!(e.to_string(), "not in jump set: timer has 0.25 remaining");

        let e = Error::InvalidGain { mu: -1.0 };
        assert!(e.to_string().contains("mu = -1"), "message carries the gain");

        let e = Error::ConfigInvalid("c \u{2264} d violated".to_string());
        assert!(e.to_string().starts_with("invalid config:"));
    }

    #[test]
    fn io_errors_convert_via_from() {
        let io = std::io::Error::new(std::io::ErrorKind::NotFound, "gone");
        let e: Error = io.into();
        assert!(matches!(e, Error::Io(_)), "io::Error must map to Error::Io");
    }
}

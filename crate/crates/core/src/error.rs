use thiserror::Error;

use crate::probe::Verdict;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Two lattice measures cannot be aligned without resampling.
    #[error("incompatible lattices: {0}")]
    IncompatibleLattice(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// Adaptive quadrature ran out of panels before reaching the requested accuracy.
    #[error("quadrature reached relative error {achieved:.3e}, target was {target:.3e} (value {value:.6e})")]
    Accuracy {
        value: f64,
        achieved: f64,
        target: f64,
    },

    /// A counterexample breakpoint cannot be represented as an `f64`.
    #[error("breakpoint n = {index} lies beyond the representable range (ln value {ln_value:.3})")]
    Range { index: usize, ln_value: f64 },

    #[error("tail vanishes at x = {x}")]
    VanishingTail { x: f64 },

    #[error("unsupported input: {0}")]
    Unsupported(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("unknown {kind} `{given}`; valid values: {valid}")]
    UnknownId {
        kind: &'static str,
        given: String,
        valid: String,
    },

    /// A theorem's hypothesis was numerically refuted on the supplied instance.
    #[error("hypothesis `{hypothesis}` of {theorem} is not satisfied (verdict: {verdict})")]
    Hypothesis {
        theorem: String,
        hypothesis: String,
        verdict: Verdict,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

//! Error type shared by every analysis module.

use thiserror::Error;

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;

/// Failures raised by the analysis routines.
///
/// Variants are grouped so that callers can map them onto coarse categories
/// (bad input versus numerical failure) with [`Error::is_numerical`].
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// A parameter lies outside its admissible domain.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// A fit has fewer independent observations than unknowns.
    #[error("underdetermined fit: {0}")]
    UnderdeterminedFit(String),

    /// Swap-spectroscopy populations violate `P1 > Ps > P0`.
    #[error("non-physical populations: {0}")]
    NonPhysicalPopulations(String),

    /// Inputs are individually valid but mutually contradictory.
    #[error("inconsistent inputs: {0}")]
    InconsistentInputs(String),

    /// A computation produced no result where at least one was required.
    #[error("empty result: {0}")]
    EmptyResult(String),

    /// The time integrator could not meet its tolerance within its step budget.
    #[error("integration failure: {0}")]
    IntegrationFailure(String),

    /// The fidelity stays below threshold all the way to the end of the scan.
    #[error("no safe detuning found for {case} (g fraction {g_fraction}, F > {threshold}) up to {delta_max_ghz} GHz")]
    BoundNotFound {
        case: String,
        g_fraction: f64,
        threshold: f64,
        delta_max_ghz: f64,
    },

    /// A collision case name is not in the catalog.
    #[error("unknown collision case `{0}`")]
    UnknownCase(String),

    /// Two operands have incompatible shapes.
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    /// A bound lookup hit a case or threshold absent from the table.
    #[error("missing bound: {0}")]
    MissingBound(String),
}

impl Error {
    /// True for failures of a numerical procedure rather than of its inputs.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::IntegrationFailure(_) | Error::BoundNotFound { .. } | Error::EmptyResult(_)
        )
    }
}

use alloc::string::String;

/// Errors produced by the model, integrator, analysis and classification layers.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// An input lies outside the mathematical domain of an operation.
    #[error("domain error in `{field}`: {reason}")]
    Domain { field: &'static str, reason: String },

    /// Shapes of the arguments disagree.
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    Dimension { expected: usize, actual: usize },

    /// The integrated state left the bounded region or became non-finite.
    #[error("integration blew up at t = {time}")]
    Blowup { time: f64 },

    /// A precondition that depends on several parameters at once does not hold.
    #[error("precondition violated: {0}")]
    Precondition(String),

    /// Numerical evidence gathered for a regime does not fit any regime.
    #[error("inconsistent classification evidence: {0}")]
    Classification(String),
}

pub type Result<T> = core::result::Result<T, Error>;

pub(crate) fn domain(field: &'static str, reason: impl Into<String>) -> Error {
    Error::Domain {
        field,
        reason: reason.into(),
    }
}

pub(crate) fn ensure_finite(field: &'static str, value: f64) -> Result<()> {
    if value.is_finite() {
        Ok(())
    } else {
        Err(domain(field, alloc::format!("must be finite, got {value}")))
    }
}

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("syntax error at position {position}: {message}")]
    Syntax { position: usize, message: String },

    #[error("unknown identifier `{name}` at position {position}")]
    UnknownIdentifier { name: String, position: usize },

    #[error("exponent at position {position} must be a non-negative integer literal")]
    NonIntegerExponent { position: usize },

    #[error("domain error in `{expr}`: {message}")]
    Domain { expr: String, message: String },

    #[error("metric is singular at {point:?} (|det| = {det:e})")]
    SingularMetric { point: Vec<f64>, det: f64 },

    #[error("base Jacobian is singular at {point:?} (|det| = {det:e})")]
    SingularJacobian { point: Vec<f64>, det: f64 },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("slot mismatch: {0}")]
    SlotMismatch(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("manifest error in [{section}]: {message}")]
    Manifest { section: String, message: String },
}

impl Error {
    pub(crate) fn manifest(section: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Manifest { section: section.into(), message: message.into() }
    }

    /// True for failures caused by the numbers themselves rather than the input text.
    pub fn is_numerical(&self) -> bool {
        matches!(self, Error::Domain { .. } | Error::SingularMetric { .. } | Error::SingularJacobian { .. })
    }
}

use num_complex::Complex64;
use thiserror::Error;

/// Errors shared across the toolkit.
///
/// Domain escapes and stencil violations are recoverable signals for the
/// diagnostics (an escaping symbol is evidence, not a bug), so they carry the
/// offending point.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum CoreError {
    /// An iterate of the symbol left the domain: `point` is the image after
    /// `step` applications that failed the membership predicate.
    #[error("symbol left the domain after {step} applications at {point:?}")]
    LeftDomain { point: Vec<f64>, step: usize },

    /// A finite-difference stencil node falls outside the domain and the
    /// field has no exact derivative oracle.
    #[error("finite-difference stencil leaves the domain near {point:?}")]
    StencilOutsideDomain { point: Vec<f64> },

    /// Growth estimation was handed no usable basis field.
    #[error("no basis field with nonzero source seminorm")]
    EmptyBasis,

    /// The requested frequency vector is not a zero of the operator symbol.
    #[error("not a characteristic zero: P(zeta) = {value}")]
    NotInVariety { value: Complex64 },

    /// The exponential series cannot be certified to converge.
    #[error("no certified growth bound: {reason}")]
    NoGrowthBound { reason: String },

    /// Structural configuration error (unknown key, wrong type, missing field).
    #[error("schema error at `{path}`: {message}")]
    Schema { path: String, message: String },

    /// A numeric configuration value is outside its admissible range.
    #[error("range error for `{field}`: {message}")]
    Range { field: String, message: String },

    /// A point or field has the wrong dimension for the operation.
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    /// An operation precondition does not hold for the supplied inputs.
    #[error("precondition violated: {message}")]
    Precondition { message: String },

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for CoreError {
    fn from(e: std::io::Error) -> Self {
        CoreError::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, CoreError>;

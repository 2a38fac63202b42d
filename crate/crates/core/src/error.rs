use thiserror::Error;

/// Errors produced by complex construction, filtrations, reduction and the
/// diagram functionals.
#[derive(Debug, Error)]
pub enum TopoError {
    /// The caller handed us something malformed (bad sizes, bad exponents,
    /// vertices out of range, ...).
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// Geometric degeneracy that the algorithms cannot (or refuse to)
    /// resolve, e.g. a fully collinear Delaunay input.
    #[error("degenerate input: {0}")]
    Degenerate(String),

    /// A loss is evaluated outside its mathematical domain
    /// (fractional `q` with a negative diagram midpoint).
    #[error("domain error: {0}")]
    Domain(String),

    /// An internal invariant was violated; this indicates a bug, not a
    /// caller mistake.
    #[error("internal consistency error: {0}")]
    Internal(String),
}

pub type Result<T> = std::result::Result<T, TopoError>;

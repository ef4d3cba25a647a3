use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParameters(String),
    #[error("element has negative valuation")]
    NegativeValuation,
    #[error("residue field mismatch: q = {q} but the residue field has {p} elements")]
    ResidueFieldMismatch { q: u64, p: u64 },
    #[error("singular matrix")]
    SingularMatrix,
    #[error("determinant is not invertible in the coefficient ring")]
    NonInvertibleDeterminant,
    #[error("the zero function has no valuation")]
    ZeroFunction,
    #[error("pole or zero at {root} lies strictly inside the annulus")]
    PoleInsideAnnulus { root: String },
    #[error("division by zero")]
    DivisionByZero,
    #[error("parse error: {0}")]
    Parse(String),
    #[error("invariant violated: {0}")]
    InvariantViolation(String),
}

pub type Result<T> = std::result::Result<T, Error>;

use thiserror::Error;

use crate::exact_arith::ArithError;
use crate::graph_ifs::ValidationReport;

#[derive(Debug, Error)]
pub enum GifsError {
    #[error(transparent)]
    Arith(#[from] ArithError),
    #[error("invalid system:\n{0}")]
    Invalid(ValidationReport),
    #[error("malformed input: {0}")]
    Input(String),
    #[error("path enumeration would produce {count} paths (cap {cap})")]
    PathCap { count: u128, cap: u64 },
    #[error("scale {r} is within arithmetic uncertainty of a stopping threshold; perturb it")]
    Ambiguous { r: String },
    #[error("matrix is not irreducible")]
    NotIrreducible,
    #[error("no convergence: {0}")]
    NoConvergence(String),
    #[error("root bracketing failed: {0}")]
    Bracket(String),
    #[error("{0}")]
    Domain(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl GifsError {
    /// Validation-class errors versus numerical failures.
    pub fn is_validation(&self) -> bool {
        matches!(self, GifsError::Invalid(_) | GifsError::Input(_) | GifsError::Arith(ArithError::Malformed(_)) | GifsError::Arith(ArithError::ZeroDenominator))
    }
}

pub type Result<T, E = GifsError> = std::result::Result<T, E>;

use num_complex::Complex64;
use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("evaluation point {0} is a pole")]
    Pole(Complex64),
    #[error("point outside the domain: {0}")]
    Domain(String),
    #[error("unsupported pole structure: {0}")]
    UnsupportedPoleStructure(String),
    #[error("function is not in a generalized Schur class: {0}")]
    NotGeneralizedSchur(String),
    #[error("numerical rank failure: {0}")]
    NumericalRankFailure(String),
    #[error("inconsistent Kreĭn–Langer data: {0}")]
    KlConsistency(String),
    #[error("pencil M - λN is singular at λ = {0}")]
    PencilSingular(Complex64),
    #[error("linear fractional denominator is singular at λ = {0}")]
    DenominatorSingular(Complex64),
    #[error("colligation is not simple (rank {rank} of {dim})")]
    NotSimple { rank: usize, dim: usize },
    #[error("no unitary extension: {reason}")]
    ExtensionInfeasible { reason: String, required_enlargement: Option<usize> },
    #[error("Pick matrix is singular: the problem is determinate")]
    DeterminateCase,
    #[error("problem data violates assumptions: {0:?}")]
    Validation(Vec<String>),
    #[error("numerical failure: {0}")]
    Numerical(String),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }
}

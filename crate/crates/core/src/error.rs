use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error reading {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed FCIDUMP header: {0}")]
    MalformedHeader(String),

    #[error("malformed FCIDUMP record on line {line}: {msg}")]
    MalformedRecord { line: usize, msg: String },

    #[error("orbital index out of range on line {line}: {index} (norb = {norb})")]
    IndexOutOfRange { line: usize, index: usize, norb: usize },

    #[error("duplicate canonical entry {element} on line {line}")]
    DuplicateEntry { line: usize, element: String },

    #[error("non-finite value {value} for {what}")]
    NonFinite { what: String, value: f64 },

    #[error("invalid integral element: {0}")]
    InvalidElement(String),

    #[error("invalid sector: {0}")]
    InvalidSector(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("state is not normalized (norm deviation {deviation:e})")]
    NotNormalized { deviation: f64 },

    #[error("states are not orthogonal (overlap {overlap:e})")]
    NotOrthogonal { overlap: f64 },

    #[error("invalid CSF: {0}")]
    InvalidCsf(String),

    #[error("parameter vector length {got} does not match layout ({expected})")]
    ParameterLength { expected: usize, got: usize },

    #[error("pauli word parse error: {0}")]
    PauliParse(String),

    #[error("reference pool has {available} candidates, {requested} requested")]
    PoolTooSmall { available: usize, requested: usize },

    #[error("invalid problem: {0}")]
    InvalidProblem(String),

    #[error("optimizer did not converge after {iterations} iterations (|g|_inf = {grad_norm:e})")]
    OptimizerNotConverged { iterations: usize, grad_norm: f64 },

    #[error("response solver did not converge after {iterations} iterations (|r|_inf = {residual:e})")]
    ResponseNotConverged { iterations: usize, residual: f64 },

    #[error("NaN encountered in {0}")]
    NaN(&'static str),

    #[error("invalid finite-difference stencil: {0}")]
    InvalidStencil(String),

    #[error("zero trial vector in Hessian-vector product")]
    ZeroTrialVector,

    #[error("shift rule for {rule} cannot be applied to parameter of kind {gate}")]
    RuleMismatch { rule: String, gate: String },

    #[error("density flavor mismatch: {0}")]
    FlavorMismatch(String),

    #[error("missing expectation value for pauli word {0}")]
    MissingWord(String),

    #[error("sector too large for exact diagonalization: {0}")]
    SectorTooLarge(String),

    #[error("only {found} spin-pure eigenstates found, {requested} requested")]
    NotEnoughStates { found: usize, requested: usize },

    #[error("unknown response strategy '{0}'")]
    UnknownStrategy(String),
}

impl Error {
    /// Stable machine-readable tag for structured error records.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Io { .. } => "io",
            Error::MalformedHeader(_)
            | Error::MalformedRecord { .. }
            | Error::IndexOutOfRange { .. }
            | Error::DuplicateEntry { .. } => "parse",
            Error::NonFinite { .. } | Error::NaN(_) => "non_finite",
            Error::InvalidElement(_)
            | Error::InvalidSector(_)
            | Error::DimensionMismatch { .. }
            | Error::NotNormalized { .. }
            | Error::NotOrthogonal { .. }
            | Error::InvalidCsf(_)
            | Error::ParameterLength { .. }
            | Error::PauliParse(_)
            | Error::PoolTooSmall { .. }
            | Error::InvalidProblem(_)
            | Error::InvalidStencil(_)
            | Error::ZeroTrialVector
            | Error::RuleMismatch { .. }
            | Error::FlavorMismatch(_)
            | Error::MissingWord(_)
            | Error::UnknownStrategy(_) => "invalid_input",
            Error::OptimizerNotConverged { .. } => "optimizer_not_converged",
            Error::ResponseNotConverged { .. } => "response_not_converged",
            Error::SectorTooLarge(_) | Error::NotEnoughStates { .. } => "fci_failure",
        }
    }
}

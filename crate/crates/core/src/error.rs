use thiserror::Error;

/// Every failure the library can report.
///
/// [`Error::code`] gives a stable module-qualified identifier, which the CLI
/// prints alongside the message.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("not a valid two-qubit state: {0}")]
    NotAState(String),
    #[error("zero-length vector cannot be normalized")]
    ZeroVector,
    #[error("state must be in the diagonal correlation frame; canonicalize it first")]
    FrameNotDiagonal,
    #[error("correlation entries not ordered |T1| >= |T2| >= |T3|: {0:?}")]
    NotOrdered([f64; 3]),
    #[error("size mismatch: expected {expected} {what}, got {got}")]
    SizeMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("unsupported dataset length n = {0} (only 2 and 3 are supported)")]
    UnsupportedN(usize),
    #[error("decoding directions are parallel or antiparallel")]
    DegenerateDecodings,
    #[error("decoding directions are coplanar (|triple product| = {0:e})")]
    CoplanarDecodings(f64),
    #[error("invalid search configuration: {0}")]
    InvalidConfig(String),
    #[error("linear program is infeasible")]
    Infeasible,
    #[error("invalid input: {0}")]
    Parse(String),
    #[error("invalid configuration: {0}")]
    Config(String),
}

impl Error {
    pub fn code(&self) -> &'static str {
        match self {
            Error::NotAState(_) => "pauli_bloch.not_a_state",
            Error::ZeroVector => "pauli_bloch.zero_vector",
            Error::FrameNotDiagonal => "optimal.frame_not_diagonal",
            Error::NotOrdered(_) => "measures.not_ordered",
            Error::SizeMismatch { .. } => "rac.size_mismatch",
            Error::UnsupportedN(_) => "rac.unsupported_n",
            Error::DegenerateDecodings => "optimal.degenerate_decodings",
            Error::CoplanarDecodings(_) => "optimal.coplanar_decodings",
            Error::InvalidConfig(_) => "oracle.invalid_config",
            Error::Infeasible => "classical.infeasible",
            Error::Parse(_) => "io.parse",
            Error::Config(_) => "cli.config",
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

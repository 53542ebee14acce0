use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("non-finite state at node {node}")]
    NonFiniteState { node: usize },
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("degenerate regression: {0}")]
    DegenerateRegression(String),
    #[error("missing input: {0}")]
    MissingInput(String),
    #[error("singular coupling at node {node} (channel {channel}, smallest singular value {sigma:e})")]
    SingularCoupling {
        node: usize,
        channel: usize,
        sigma: f64,
    },
    #[error("empty candidate set")]
    EmptyCandidateSet,
    #[error("empty codebook")]
    EmptyCodebook,
    #[error("length mismatch: {0}")]
    LengthMismatch(String),
    #[error("cannot compare quantized and continuous word sequences")]
    MixedRepresentation,
    #[error("non-hermitian hamiltonian spec: {0}")]
    NonHermitianSpec(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("{}", fmt_parse(.line, .message))]
    Parse {
        line: Option<usize>,
        message: String,
    },
}

fn fmt_parse(line: &Option<usize>, message: &str) -> String {
    match line {
        Some(l) => format!("parse error at row {l}: {message}"),
        None => format!("parse error: {message}"),
    }
}

impl Error {
    pub(crate) fn dims(msg: impl Into<String>) -> Self {
        Error::DimensionMismatch(msg.into())
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn parse(line: Option<usize>, msg: impl Into<String>) -> Self {
        Error::Parse {
            line,
            message: msg.into(),
        }
    }
}

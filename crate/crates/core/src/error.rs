use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("quadrature would need {required} elements, cap is {cap}")]
    QuadratureOverflow { required: usize, cap: usize },

    #[error("degenerate geometry: {0}")]
    DegenerateGeometry(String),

    #[error("invalid spacing: {0}")]
    InvalidSpacing(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("too few nodes: {0}")]
    TooFewNodes(String),

    #[error("non-finite loss at epoch {epoch}")]
    Divergence { epoch: usize },

    #[error("unknown node id `{0}`")]
    UnknownNodeId(String),

    #[error("empty RSS stream")]
    EmptyStream,

    #[error("no free-space reference for link {0}")]
    MissingFreeSpaceReference(usize),

    #[error("schema mismatch: expected `{expected}`, found `{found}`")]
    SchemaMismatch { expected: String, found: String },

    #[error("parse error at {context}: {message}")]
    Parse { context: String, message: String },

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Stable machine-parsable category, used by the CLI error line.
    pub fn category(&self) -> &'static str {
        match self {
            Error::QuadratureOverflow { .. } => "quadrature-overflow",
            Error::DegenerateGeometry(_) => "degenerate-geometry",
            Error::InvalidSpacing(_) => "invalid-spacing",
            Error::InvalidArgument(_) => "invalid-argument",
            Error::ShapeMismatch(_) => "shape-mismatch",
            Error::TooFewNodes(_) => "too-few-nodes",
            Error::Divergence { .. } => "divergence",
            Error::UnknownNodeId(_) => "unknown-node-id",
            Error::EmptyStream => "empty-stream",
            Error::MissingFreeSpaceReference(_) => "missing-free-space-reference",
            Error::SchemaMismatch { .. } => "schema-mismatch",
            Error::Parse { .. } => "parse-error",
            Error::Config(_) => "config-error",
            Error::Io(_) => "io-error",
        }
    }

    pub(crate) fn parse(context: impl Into<String>, message: impl ToString) -> Self {
        Error::Parse {
            context: context.into(),
            message: message.to_string(),
        }
    }
}

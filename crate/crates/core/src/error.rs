use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("the zero vector has no primitive part")]
    ZeroVector,
    #[error("truncation orders differ: {0} vs {1}")]
    OrderMismatch(u32, u32),
    #[error("series is not topologically nilpotent (it has a term of filtration order 0): {0}")]
    NotNilpotent(String),
    #[error("series is not of the form 1 + (positive filtration terms): {0}")]
    NotUnit(String),
    #[error("derivation is not in the tropical vertex subalgebra: {0}")]
    NotInVertexAlgebra(String),
    #[error("invalid wall: {0}")]
    InvalidWall(String),
    #[error("invalid fan: {0}")]
    InvalidFan(String),
    #[error("{0} is not a singular point of the diagram")]
    NotSingular(String),
    #[error("residue at {point} is not perpendicular to its exponent: {term}")]
    NonPerpendicularResidue { point: String, term: String },
    #[error("completion did not terminate: {0}")]
    NonTermination(String),
    #[error("points are not in generic position: {0}")]
    Degenerate(String),
    #[error("point lies on the support of the diagram: {0}")]
    OnSupport(String),
    #[error("path passes through a singular point: {0}")]
    PathThroughSingular(String),
    #[error("propagator expects a point-supported term, got {0}")]
    NotPointSupported(String),
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("internal invariant violated: {0}")]
    Internal(String),
}

impl Error {
    pub fn parse(line: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            line,
            msg: msg.into(),
        }
    }

    /// Re-tags a parse error with the line it came from.
    pub fn at_line(self, line: usize) -> Self {
        match self {
            Error::Parse { msg, .. } => Error::Parse { line, msg },
            other => other,
        }
    }
}

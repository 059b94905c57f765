use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// A coefficient was given on a diagonal, where it must vanish.
    #[error("multi-index {0:?} has a repeated entry")]
    RepeatedIndex(Vec<u32>),
    #[error("multi-index {0:?} contains the index 0; indices start at 1")]
    ZeroIndex(Vec<u32>),
    #[error("multi-index {0:?} appears more than once after canonical ordering")]
    DuplicateKey(Vec<u32>),
    #[error("expected a tuple of length {expected}, got length {got}")]
    BadLevel { expected: usize, got: usize },
    #[error("level {level} exceeds the declared maximum level {max_level}")]
    LevelOutOfRange { level: usize, max_level: usize },
    #[error("coefficients are identically zero")]
    ZeroKernel,
    #[error("contraction order {r} is outside 0..={max}")]
    BadContractionOrder { r: usize, max: usize },
    #[error("problem too large: {0}")]
    TooLarge(String),
    #[error("realization covers indices 1..={got} but the support needs 1..={needed}")]
    SupportMismatch { needed: usize, got: usize },
    #[error("need at least {needed} samples, got {got}")]
    TooFewSamples { needed: usize, got: usize },
    #[error("invalid Doeblin triple: {0}")]
    InvalidDoeblin(String),
    #[error("law `{0}` has a nonzero third moment")]
    ThirdMomentNonzero(String),
    #[error("coefficients are not normalized: i_N(c) = {0}")]
    NotNormalized(f64),
    #[error("invalid moment table: {0}")]
    InvalidMoments(String),
    #[error("unknown distribution `{0}`")]
    UnknownDistribution(String),
    #[error("empty sample")]
    EmptySample,
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    /// Kernel or constants file does not match the expected schema.
    #[error("schema error at {pointer}: {message}")]
    Schema { pointer: String, message: String },
    #[error("{pointer}: {source}")]
    AtPointer {
        pointer: String,
        #[source]
        source: Box<Error>,
    },
    #[error("i/o error on {path}: {message}")]
    Io { path: String, message: String },
}

impl Error {
    /// Attaches a JSON pointer to an error raised while decoding a file.
    pub fn at(self, pointer: impl Into<String>) -> Error {
        Error::AtPointer {
            pointer: pointer.into(),
            source: Box::new(self),
        }
    }

    /// The innermost error, with any pointer context stripped.
    pub fn root(&self) -> &Error {
        match self {
            Error::AtPointer { source, .. } => source.root(),
            other => other,
        }
    }

    /// JSON pointer attached to the error, if any.
    pub fn pointer(&self) -> Option<&str> {
        match self {
            Error::AtPointer { pointer, .. } | Error::Schema { pointer, .. } => Some(pointer),
            _ => None,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

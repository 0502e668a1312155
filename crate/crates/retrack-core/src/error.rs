use alloc::string::String;
use core::fmt;

/// Errors produced by the core pipeline operations.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Error {
    /// Inputs that must share dimensions do not.
    DimensionMismatch {
        expected: (u32, u32),
        found: (u32, u32),
    },
    /// An operation that needs at least one element received none.
    EmptyInput,
    /// Frame or region geometry is incompatible with the cube grid.
    Geometry(String),
    /// A query fragment with no activations cannot be composed.
    EmptyQuery,
    /// An annotation refers to a video or frame that does not exist.
    Reference(String),
    /// An annotation violates a structural constraint (gap, bad box).
    InvalidAnnotation(String),
    /// Ground-truth and hypothesis tracks share no frames.
    EmptyOverlap,
    /// Multi-object scoring is undefined without ground-truth boxes.
    EmptyGroundTruth,
    /// A parameter is outside its documented range.
    InvalidParam(&'static str),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::DimensionMismatch { expected, found } => write!(
                f,
                "dimension mismatch: expected {}x{}, found {}x{}",
                expected.0, expected.1, found.0, found.1
            ),
            Error::EmptyInput => write!(f, "empty input"),
            Error::Geometry(msg) => write!(f, "bad geometry: {msg}"),
            Error::EmptyQuery => write!(f, "query fragment has no activations"),
            Error::Reference(msg) => write!(f, "dangling reference: {msg}"),
            Error::InvalidAnnotation(msg) => write!(f, "invalid annotation: {msg}"),
            Error::EmptyOverlap => write!(f, "tracks share no frames"),
            Error::EmptyGroundTruth => write!(f, "no ground-truth boxes"),
            Error::InvalidParam(name) => write!(f, "parameter out of range: {name}"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for Error {}

pub type Result<T> = core::result::Result<T, Error>;

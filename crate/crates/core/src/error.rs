use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected} points, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid label {0} (labels must be -1 or +1)")]
    InvalidLabel(i64),

    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("hypothesis class is empty")]
    EmptyClass,

    #[error("hypotheses {first} and {second} have identical labelings")]
    DuplicateHypothesis { first: usize, second: usize },

    #[error("version space is empty")]
    EmptyVersionSpace,

    #[error("{what} index {index} out of range (len {len})")]
    IndexOutOfRange { what: &'static str, index: usize, len: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("distribution {dist} puts zero mass on the agreement region")]
    DegenerateAgreement { dist: usize },

    #[error("labeled pool for distribution {dist} is empty")]
    EmptyPool { dist: usize },

    #[error("declared nu {declared} does not match computed nu {computed}")]
    NuMismatch { declared: f64, computed: f64 },
}

pub(crate) fn check_index(what: &'static str, index: usize, len: usize) -> Result<()> {
    if index < len {
        Ok(())
    } else {
        Err(Error::IndexOutOfRange { what, index, len })
    }
}

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SmcfError {
    #[error("a network needs at least 2 sites, got {0}")]
    TooFewSites(usize),
    #[error("site {site} out of range for a network of {sites} sites")]
    SiteOutOfRange { site: usize, sites: usize },
    #[error("self-loop at site {0}")]
    SelfLoop(usize),
    #[error("duplicate pair ({0}, {1})")]
    DuplicatePair(usize, usize),
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("non-finite state after step {step}")]
    NumericOverflow { step: usize },
}

pub type Result<T> = std::result::Result<T, SmcfError>;

pub(crate) fn check_len(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(SmcfError::DimensionMismatch { expected, found })
    }
}

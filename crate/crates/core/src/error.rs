use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    Dimension { expected: usize, found: usize },
    #[error("point outside domain {0}")]
    OutsideDomain(String),
    #[error("range guard failed: {0}")]
    Guard(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("invalid argument: {0}")]
    Invalid(String),
    #[error("signature error: {0}")]
    Signature(String),
    #[error("overlapping occurrences: {0}")]
    Overlap(String),
    #[error("no assignment for opaque `{0}`")]
    MissingAssignment(String),
    #[error("opaque leaf `{0}` cannot be evaluated")]
    Opaque(String),
    #[error("rule not applicable: {0}")]
    NotApplicable(String),
}

impl Error {
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Dimension { .. } => "dimension",
            Error::OutsideDomain(_) => "outside-domain",
            Error::Guard(_) => "guard",
            Error::Parse(_) => "parse",
            Error::Invalid(_) => "invalid",
            Error::Signature(_) => "signature",
            Error::Overlap(_) => "overlap",
            Error::MissingAssignment(_) => "missing-assignment",
            Error::Opaque(_) => "opaque",
            Error::NotApplicable(_) => "not-applicable",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn dim_check(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::Dimension { expected, found })
    }
}

use thiserror::Error;

/// Broad failure classes; the CLI maps them to exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    /// Malformed or inconsistent input.
    Validation,
    /// The numerics cannot decide (tangential crossing, no admissible epsilon).
    Ambiguity,
    /// A mathematical precondition fails (transversality, sampling density).
    Precondition,
}

#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("invalid input at {location}: {reason}")]
    Invalid { reason: String, location: String },
    #[error("ambiguous at {location}: {reason}")]
    Ambiguous { reason: String, location: String },
    #[error("precondition failed at {location}: {reason}")]
    Precondition { reason: String, location: String },
    #[error("numerical failure: {0}")]
    Numerical(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn invalid(reason: impl Into<String>, location: impl Into<String>) -> Self {
        Error::Invalid { reason: reason.into(), location: location.into() }
    }

    pub fn ambiguous(reason: impl Into<String>, location: impl Into<String>) -> Self {
        Error::Ambiguous { reason: reason.into(), location: location.into() }
    }

    pub fn precondition(reason: impl Into<String>, location: impl Into<String>) -> Self {
        Error::Precondition { reason: reason.into(), location: location.into() }
    }

    pub fn numerical(reason: impl Into<String>) -> Self {
        Error::Numerical(reason.into())
    }

    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::Invalid { .. } => ErrorKind::Validation,
            Error::Ambiguous { .. } | Error::Numerical(_) => ErrorKind::Ambiguity,
            Error::Precondition { .. } => ErrorKind::Precondition,
        }
    }

    pub fn reason(&self) -> String {
        match self {
            Error::Invalid { reason, .. }
            | Error::Ambiguous { reason, .. }
            | Error::Precondition { reason, .. } => reason.clone(),
            Error::Numerical(r) => r.clone(),
        }
    }

    pub fn location(&self) -> String {
        match self {
            Error::Invalid { location, .. }
            | Error::Ambiguous { location, .. }
            | Error::Precondition { location, .. } => location.clone(),
            Error::Numerical(_) => String::new(),
        }
    }

    /// Prefixes the location, e.g. to name the path sample that failed.
    pub fn at(self, prefix: &str) -> Self {
        let join = |loc: String| if loc.is_empty() { prefix.to_string() } else { format!("{prefix}.{loc}") };
        match self {
            Error::Invalid { reason, location } => Error::Invalid { reason, location: join(location) },
            Error::Ambiguous { reason, location } => Error::Ambiguous { reason, location: join(location) },
            Error::Precondition { reason, location } => {
                Error::Precondition { reason, location: join(location) }
            }
            e @ Error::Numerical(_) => e,
        }
    }
}

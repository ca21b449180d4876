use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Broad failure class, used by the CLI to pick an exit code.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ErrorClass {
    Config,
    Io,
    Numeric,
}

impl ErrorClass {
    pub fn exit_code(self) -> i32 {
        match self {
            ErrorClass::Config => 1,
            ErrorClass::Io => 2,
            ErrorClass::Numeric => 3,
        }
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid dimension: {0}")]
    InvalidDimension(String),

    #[error("site {site} out of range for a chain of {n_sites} sites")]
    SiteOutOfRange { site: usize, n_sites: usize },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid site range {start}..{end} for a chain of {n_sites} sites")]
    InvalidSiteRange { start: usize, end: usize, n_sites: usize },

    #[error("invalid chain configuration: {0}")]
    InvalidChain(String),

    #[error("eigensolver failed to converge{}", seed_suffix(.seed))]
    Solver { seed: Option<u64> },

    #[error("invalid density matrix: {0}")]
    InvalidDensity(String),

    #[error("value out of range: {0}")]
    OutOfRange(String),

    #[error("invalid time grid: {0}")]
    InvalidGrid(String),

    #[error("fit precondition violated: {0}")]
    Fit(String),

    #[error("{0}")]
    Analysis(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed data in {path}: {message}")]
    Malformed { path: String, message: String },
}

fn seed_suffix(seed: &Option<u64>) -> String {
    match seed {
        Some(s) => format!(" (realization seed {s:#018x})"),
        None => String::new(),
    }
}

impl Error {
    pub fn class(&self) -> ErrorClass {
        match self {
            Error::Config(_) | Error::InvalidChain(_) => ErrorClass::Config,
            Error::Io { .. } | Error::Malformed { .. } => ErrorClass::Io,
            _ => ErrorClass::Numeric,
        }
    }

    pub fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        Error::Io { path: path.as_ref().display().to_string(), source }
    }

    /// Attaches a realization seed to solver failures; other errors pass through.
    pub fn with_seed(self, seed: u64) -> Self {
        match self {
            Error::Solver { .. } => Error::Solver { seed: Some(seed) },
            other => other,
        }
    }
}

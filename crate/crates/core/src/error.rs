use thiserror::Error;

/// Errors produced anywhere in the identification toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid network: {0}")]
    InvalidNetwork(String),

    #[error("line `{0}` has a singular series impedance matrix")]
    SingularImpedance(String),

    #[error("unknown component `{0}`")]
    UnknownComponent(String),

    #[error("event rejected: {0}")]
    EventRejected(String),

    #[error("invalid admittance matrix: {0}")]
    InvalidMatrix(String),

    #[error("invalid phasor data: {0}")]
    InvalidData(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("voltage data is rank deficient (rank {rank} of {dim}); use the low-rank identification path")]
    RankDeficient { rank: usize, dim: usize },

    #[error("ill-posed problem: {0}")]
    IllPosed(String),

    #[error("solver failure: {0}")]
    Solver(String),

    #[error("invalid scenario: {0}")]
    InvalidScenario(String),

    #[error("io error on `{path}`: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error in `{path}`: {message}")]
    Parse { path: String, message: String },
}

impl Error {
    /// Short machine-readable tag used in CLI error reports.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidNetwork(_) => "invalid-network",
            Error::SingularImpedance(_) => "singular-impedance",
            Error::UnknownComponent(_) => "unknown-component",
            Error::EventRejected(_) => "event-rejected",
            Error::InvalidMatrix(_) => "invalid-matrix",
            Error::InvalidData(_) => "invalid-data",
            Error::Shape(_) => "shape-mismatch",
            Error::InvalidParameter(_) => "invalid-parameter",
            Error::RankDeficient { .. } => "rank-deficient",
            Error::IllPosed(_) => "ill-posed",
            Error::Solver(_) => "solver",
            Error::InvalidScenario(_) => "invalid-scenario",
            Error::Io { .. } => "io",
            Error::Parse { .. } => "parse",
        }
    }

    pub(crate) fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

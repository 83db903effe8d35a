use thiserror::Error;

/// Errors produced by model construction, estimation, and file handling.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid array geometry: {0}")]
    InvalidGeometry(String),

    #[error("invalid subcarrier grid: {0}")]
    InvalidGrid(String),

    #[error("invalid signal spectrum: {0}")]
    InvalidSpectrum(String),

    #[error("invalid path set: {0}")]
    InvalidPaths(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("steering matrix is rank deficient: {0}")]
    RankDeficientSteering(String),

    #[error("stacked response matrix is rank deficient: {0}")]
    RankDeficientResponse(String),

    #[error("delay Gram matrix is singular: {0}")]
    SingularGram(String),

    #[error("{matrix} is singular or indefinite: {detail}")]
    SingularInformation {
        matrix: &'static str,
        detail: String,
    },

    #[error("zero input in {0}; per-path solve is undefined")]
    ZeroInput(&'static str),

    #[error("spectrum is zero at active bin {bin}; per-bin normalization is undefined")]
    SpectrumZeroBin { bin: usize },

    #[error("delay is unidentifiable: {0}")]
    DelayUnidentifiable(String),

    #[error("closed form requires identical delays: {0}")]
    UnequalDelays(String),

    #[error("I/O: {0}")]
    Io(#[from] std::io::Error),

    #[error("{}: {source}", path.display())]
    IoAt {
        path: std::path::PathBuf,
        source: std::io::Error,
    },

    #[error("CSI file, line {line}: {msg}")]
    CsiParse { line: usize, msg: String },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Process exit code for the CLI: 2 bad configuration or mismatched
    /// inputs, 3 I/O or file-format failure, 4 numerical degeneracy.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidGeometry(_)
            | Error::InvalidGrid(_)
            | Error::InvalidSpectrum(_)
            | Error::InvalidPaths(_)
            | Error::InvalidConfig(_)
            | Error::DimensionMismatch(_) => 2,
            Error::Io(_) | Error::IoAt { .. } | Error::CsiParse { .. } => 3,
            Error::RankDeficientSteering(_)
            | Error::RankDeficientResponse(_)
            | Error::SingularGram(_)
            | Error::SingularInformation { .. }
            | Error::ZeroInput(_)
            | Error::SpectrumZeroBin { .. }
            | Error::DelayUnidentifiable(_)
            | Error::UnequalDelays(_) => 4,
        }
    }
}

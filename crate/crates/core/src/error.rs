use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid geometry: {0}")]
    Geometry(String),

    #[error("site index {index} out of range for lattice of {sites} sites")]
    IndexOutOfRange { index: usize, sites: usize },

    #[error("invalid probability {0} (must lie in [0, 1])")]
    Probability(f64),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("unknown observable `{0}`")]
    UnknownObservable(String),

    /// The canonical spanning curve never crosses one half.
    #[error("spanning probability never crosses 1/2 on this geometry")]
    NoCrossing,

    #[error("undefined value: {0}")]
    Undefined(String),

    #[error("divergent quantity: {0}")]
    Divergent(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("degenerate fit: {0}")]
    DegenerateFit(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Stable snake_case name of the variant.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Geometry(_) => "geometry",
            Error::IndexOutOfRange { .. } => "index_out_of_range",
            Error::Probability(_) => "probability",
            Error::InvalidArgument(_) => "invalid_argument",
            Error::UnknownObservable(_) => "unknown_observable",
            Error::NoCrossing => "no_crossing",
            Error::Undefined(_) => "undefined",
            Error::Divergent(_) => "divergent",
            Error::InsufficientData(_) => "insufficient_data",
            Error::DegenerateFit(_) => "degenerate_fit",
            Error::Unsupported(_) => "unsupported",
            Error::Io { .. } => "io",
        }
    }

    /// Whether the error stems from bad input rather than from the
    /// computation or the environment.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::Geometry(_)
                | Error::IndexOutOfRange { .. }
                | Error::Probability(_)
                | Error::InvalidArgument(_)
                | Error::UnknownObservable(_)
                | Error::Unsupported(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_probability(p: f64) -> Result<()> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(Error::Probability(p))
    }
}

use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("degenerate curve: length {length:e} is at or below the extinction threshold")]
    DegenerateCurve { length: f64 },

    #[error("curve is not immersed: zero speed at sample {index}")]
    NotImmersed { index: usize },

    #[error("non-finite velocity at t = {t} (stage {stage})")]
    BlowUp { t: f64, stage: usize },

    #[error("step size underflow at t = {t}: dt = {dt:e} with error ratio {err:e}")]
    Stiffness { t: f64, dt: f64, err: f64 },

    #[error("missing diagnostics for check `{0}`")]
    MissingDiagnostics(&'static str),

    #[error("usage error: {0}")]
    Usage(String),

    #[error("input error in {source_name}: {message}")]
    Input { source_name: String, message: String },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn input(source_name: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Input {
            source_name: source_name.into(),
            message: message.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit status for the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Usage(_) | Error::InvalidArgument(_) => 2,
            Error::Input { .. } | Error::Domain(_) | Error::NotImmersed { .. } => 3,
            Error::DegenerateCurve { .. } => 3,
            Error::BlowUp { .. } | Error::Stiffness { .. } => 4,
            Error::MissingDiagnostics(_) => 1,
            Error::Io { .. } => 1,
        }
    }
}

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{0}")]
    Domain(String),
    #[error("{0}")]
    Convergence(String),
    #[error("{0}")]
    Resource(String),
    #[error("{0}")]
    Degenerate(String),
    #[error("{0}")]
    Numerical(String),
    #[error("{0}")]
    Spectrum(String),
    #[error("{0}")]
    StepSize(String),
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {msg}")]
    Parse { path: String, msg: String },
    /// A sweep cell failed; carries the cell coordinates.
    #[error("cell ({row}, {col}) at ({axis1_value}, {axis2_value}): {source}")]
    Cell {
        row: usize,
        col: usize,
        axis1_value: f64,
        axis2_value: f64,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    /// Machine-readable category, used as the CLI error tag.
    pub fn category(&self) -> &'static str {
        match self {
            Error::Domain(_) => "domain",
            Error::Convergence(_) => "convergence",
            Error::Resource(_) => "resource",
            Error::Degenerate(_) => "degenerate",
            Error::Numerical(_) => "numerical",
            Error::Spectrum(_) => "spectrum",
            Error::StepSize(_) => "step-size",
            Error::Usage(_) => "usage",
            Error::Io { .. } => "io",
            Error::Parse { .. } => "parse",
            Error::Cell { source, .. } => source.category(),
        }
    }

    pub fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }

    pub fn parse(path: impl Into<String>, msg: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            msg: msg.into(),
        }
    }

    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}

use std::path::PathBuf;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("incompatible grids: {0}")]
    IncompatibleGrid(String),

    #[error("ghost width {0} is not supported (max 2)")]
    UnsupportedWidth(usize),

    #[error("invalid sample: {0}")]
    InvalidSample(String),

    #[error("newton iteration did not converge after {iterations} iterations (residual {residual:e})")]
    NewtonFailure { iterations: usize, residual: f64 },

    #[error("singular linear system (pivot {pivot:e})")]
    SingularSystem { pivot: f64 },

    #[error("scheme parameter g = {g} hits the pole of the update formula")]
    SingularParameter { g: f64 },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("CFL condition violated: courant number {courant} > 1")]
    CflViolation { courant: f64 },

    #[error("non-positive {quantity} in cell {cell}")]
    Positivity { cell: usize, quantity: &'static str },

    #[error("non-finite loss while differentiating entry {index} ({label})")]
    GradientFailure { index: usize, label: String },

    #[error("loss is not finite at the starting point ({0})")]
    InvalidStart(f64),

    #[error("invalid graph: {0}")]
    InvalidGraph(String),

    #[error("no standard resolution reaches the trained error and extrapolation is disabled")]
    UnmatchedError,

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }
}

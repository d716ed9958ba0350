use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Invalid grid, parameter or experiment configuration.
    #[error("configuration error: {0}")]
    Config(String),

    #[error("grid functions live on different grids")]
    GridMismatch,

    /// The stage iteration produced non-finite values.
    #[error("stage iteration diverged at iteration {iteration}")]
    Divergence { iteration: usize },

    /// A simulation step failed; wraps the underlying error with the step index.
    #[error("step {step} failed: {source}")]
    Step {
        step: usize,
        #[source]
        source: Box<Error>,
    },

    /// The projection direction is orthogonal to the energy gradient.
    #[error("degenerate projection direction (denominator {denominator:e})")]
    DegenerateProjection { denominator: f64 },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("config file: {0}")]
    ConfigFile(#[from] toml::de::Error),
}

impl Error {
    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    /// True when this error (or the error it wraps) is a solver divergence.
    pub fn is_divergence(&self) -> bool {
        match self {
            Error::Divergence { .. } => true,
            Error::Step { source, .. } => source.is_divergence(),
            _ => false,
        }
    }
}

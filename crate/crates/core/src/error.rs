use thiserror::Error;

/// Errors raised by the level-crossing simulation library.
#[derive(Debug, Error)]
pub enum Error {
    /// A scalar or structural argument violates an operation precondition.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// A path violates a structural invariant (non-cyclic where a cycle is
    /// required, mismatched endpoints, non-constant polar angle, ...).
    #[error("invalid path: {0}")]
    InvalidPath(String),

    /// The parameter point is too close to the level crossing for the
    /// eigenframe (and hence φ, θ) to be defined.
    #[error("degenerate point: radius {radius:.3e} below threshold {threshold:.3e}")]
    DegeneratePoint { radius: f64, threshold: f64 },

    /// A phase was requested for a vanishing overlap.
    #[error("undefined phase: overlap magnitude {0:.3e} is numerically zero")]
    UndefinedPhase(f64),

    /// Sampled sequences that must share a grid have different lengths.
    #[error("grid mismatch: expected {expected} samples, got {got}")]
    GridMismatch { expected: usize, got: usize },

    /// Experiment configuration is malformed (schema violation, unknown key,
    /// inconsistent grid, unsupported quantity).
    #[error("config error: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Wrap an I/O error with the file path it concerns.
    pub(crate) fn io_at(path: &std::path::Path, e: std::io::Error) -> Self {
        Error::Io(std::io::Error::new(
            e.kind(),
            format!("{}: {e}", path.display()),
        ))
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Config(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

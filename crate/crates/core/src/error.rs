use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("parameter `{name}` must be strictly positive (got {value})")]
    NonPositiveParameter { name: &'static str, value: f64 },

    #[error("grid too coarse: J = {space_steps} space steps, need at least 4")]
    GridTooCoarse { space_steps: usize },

    #[error("initial profile is {value} at x = {x}, Dirichlet data must vanish at both ends")]
    IncompatibleDirichletData { x: f64, value: f64 },

    #[error("system matrix is singular at pivot {pivot}")]
    SingularMatrix { pivot: usize },

    #[error("dimension mismatch in {what}: expected {expected}, found {found}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("solution blew up (|y| = {magnitude:e}); reduce dt, guideline dt <= dx / (4 max|y|)")]
    BlowUp { magnitude: f64 },

    #[error("step {step}: {source}")]
    AtStep {
        step: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("need at least {required} samples in the fit window, found {found}")]
    InsufficientSamples { found: usize, required: usize },

    #[error("energy is non-positive at t = {t}; too few samples before it to fit")]
    NonPositiveEnergy { t: f64 },

    #[error("invalid Lyapunov parameters mu1 = {mu1}, mu2 = {mu2} (need mu1 > 0, 0 < mu2 < 1)")]
    InvalidLyapunovParams { mu1: f64, mu2: f64 },

    #[error("feedback is not admissible: |alpha| + |beta| = {sum} >= 1")]
    NotAdmissible { sum: f64 },

    #[error("beta = 0: no delay term, use the scalar criterion |alpha| < 1")]
    BetaZero,

    #[error("length L = {length} is outside (0, sqrt(3) pi)")]
    LengthOutOfRange { length: f64 },

    #[error("radius r = {r} is not below the smallness radius {max}")]
    RadiusTooLarge { r: f64, max: f64 },

    #[error("line {line}: {key}: {message}")]
    Parse {
        line: usize,
        key: String,
        message: String,
    },

    #[error("invalid configuration:\n  {}", .0.join("\n  "))]
    Validation(Vec<String>),

    #[error("no plottable points in series `{0}`")]
    EmptySeries(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code: 1 validation, 2 runtime, 3 I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::AtStep { source, .. } => source.exit_code(),
            Error::SingularMatrix { .. }
            | Error::BlowUp { .. }
            | Error::DimensionMismatch { .. }
            | Error::InsufficientSamples { .. }
            | Error::NonPositiveEnergy { .. } => 2,
            Error::Io { .. } => 3,
            _ => 1,
        }
    }
}

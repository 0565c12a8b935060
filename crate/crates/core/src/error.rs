use thiserror::Error;

/// Classifies errors for process exit codes: bad input/configuration (2),
/// iterative procedures that failed to converge (3), numerical breakdown (4).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Config,
    Convergence,
    Numeric,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("eigensolver failed to converge on a matrix of size {size} (eigenvalue {index})")]
    EigenNoConvergence { size: usize, index: usize },

    #[error(
        "geometry relaxation did not converge after {iterations} sweeps \
         (last max displacement change {residual:.3e} A)"
    )]
    RelaxNoConvergence {
        iterations: usize,
        residual: f64,
        /// Max displacement change per sweep, most recent last (tail kept).
        history: Vec<f64>,
    },

    #[error(
        "degenerate occupied/virtual level pair ({occupied}, {empty}) with splitting \
         {splitting:.3e} eV makes the harmonic expansion singular"
    )]
    DegenerateLevels {
        occupied: usize,
        empty: usize,
        splitting: f64,
    },

    #[error("geometry is not a local minimum: non-positive curvature on modes {modes:?}")]
    UnstableGeometry { modes: Vec<usize> },

    #[error("non-finite value during integration at t = {time_fs} fs ({detail})")]
    NumericFailure { time_fs: f64, detail: String },

    #[error("trajectory {index} failed: {source}")]
    Trajectory {
        index: u64,
        #[source]
        source: Box<Error>,
    },

    #[error("checkpoint rejected: {0}")]
    Checkpoint(String),

    #[error("i/o error on {}: {source}", path.display())]
    Io {
        path: std::path::PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn class(&self) -> ErrorClass {
        match self {
            Error::InvalidInput(_) | Error::Config(_) | Error::Checkpoint(_) => ErrorClass::Config,
            Error::RelaxNoConvergence { .. } => ErrorClass::Convergence,
            Error::EigenNoConvergence { .. }
            | Error::DegenerateLevels { .. }
            | Error::UnstableGeometry { .. }
            | Error::NumericFailure { .. } => ErrorClass::Numeric,
            Error::Trajectory { source, .. } => source.class(),
            Error::Io { .. } => ErrorClass::Config,
        }
    }

    /// Process exit code for this error (config 2, convergence 3, numeric 4).
    pub fn exit_code(&self) -> i32 {
        match self.class() {
            ErrorClass::Config => 2,
            ErrorClass::Convergence => 3,
            ErrorClass::Numeric => 4,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("fields live on different grids: {0}")]
    GridMismatch(String),

    #[error("linear solver did not converge in {max_iter} iterations (relative residual {residual:.3e})")]
    NonConvergence { max_iter: usize, residual: f64 },

    #[error("right-hand side has nonzero mean {mean:.3e}; pure Neumann/periodic problem is incompatible")]
    IncompatibleRhs { mean: f64 },

    #[error("Picard iteration failed after {halvings} slab halvings (data size proxy U0 = {u0_proxy:.6e})")]
    MaxHalvingsExceeded { halvings: usize, u0_proxy: f64 },

    #[error("unknown {kind} `{name}` (registered: {known})")]
    UnknownStrategy {
        kind: &'static str,
        name: String,
        known: String,
    },

    #[error("{0}")]
    Config(#[from] crate::config::ConfigError),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Short machine-readable name of the variant.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidGrid(_) => "InvalidGrid",
            Error::GridMismatch(_) => "GridMismatch",
            Error::NonConvergence { .. } => "NonConvergence",
            Error::IncompatibleRhs { .. } => "IncompatibleRhs",
            Error::MaxHalvingsExceeded { .. } => "MaxHalvingsExceeded",
            Error::UnknownStrategy { .. } => "UnknownStrategy",
            Error::Config(_) => "Config",
            Error::InvalidArgument(_) => "InvalidArgument",
            Error::Io(_) => "Io",
            Error::Csv(_) => "Csv",
        }
    }

    /// Process exit code used by the command-line driver.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::UnknownStrategy { .. } | Error::InvalidGrid(_) => 2,
            _ => 3,
        }
    }
}

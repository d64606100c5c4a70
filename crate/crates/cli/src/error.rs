use std::path::PathBuf;

use thiserror::Error;

use crate::assumptions::AssumptionReport;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid configuration:\n{}", .0.iter().map(|e| format!("  - {e}")).collect::<Vec<_>>().join("\n"))]
    Invalid(Vec<String>),
    #[error("failed to parse {path}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error("assumption check failed:\n{0}")]
    Assumptions(AssumptionReport),
    #[error(transparent)]
    Core(#[from] sociallearn::Error),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("observation streams differ across strategies in trial {0}")]
    StreamMismatch(u32),
}

impl CliError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Self::Io {
            path: path.into(),
            source,
        }
    }

    /// 0 success, 1 I/O, 2 validation, 3 assumption failure, 4 numerical.
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Invalid(_) | Self::Parse { .. } => 2,
            Self::Assumptions(_) => 3,
            Self::Io { .. } => 1,
            Self::StreamMismatch(_) => 4,
            Self::Core(e) => core_exit_code(e),
        }
    }
}

fn core_exit_code(e: &sociallearn::Error) -> i32 {
    use sociallearn::Error as E;
    match e {
        E::AssumptionViolated { .. }
        | E::ConnectivityRetriesExhausted { .. }
        | E::IdentifiabilityRetriesExhausted(_)
        | E::InfiniteDivergence { .. } => 3,
        E::PerronNotConverged { .. }
        | E::ZeroLikelihood { .. }
        | E::DegenerateOwnBelief
        | E::NonFiniteBelief { .. } => 4,
        E::Simulation { source, .. } => match core_exit_code(source) {
            2 => 2,
            _ => 4,
        },
        _ => 2,
    }
}

pub type Result<T, E = CliError> = std::result::Result<T, E>;

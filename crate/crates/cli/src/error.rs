use std::path::PathBuf;

use sfpg_core::io::IoError;
use sfpg_core::macroscopic::MacroError;
use sfpg_core::quantum_state::QuantumError;
use sfpg_core::spectra::SpectraError;
use sfpg_core::tdse::TdseError;

use crate::config::ConfigError;
use crate::pipeline::Stage;

#[derive(Debug, thiserror::Error)]
pub enum NumericalError {
    #[error(transparent)]
    Tdse(#[from] TdseError),
    #[error(transparent)]
    Spectra(#[from] SpectraError),
    #[error(transparent)]
    Macro(#[from] MacroError),
    #[error(transparent)]
    Quantum(#[from] QuantumError),
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(#[from] ConfigError),
    #[error("stage `{stage}` needs {missing}")]
    StageDependencyMissing { stage: Stage, missing: String },
    #[error("stage `{stage}` failed: {source}")]
    Numerical {
        stage: Stage,
        #[source]
        source: NumericalError,
    },
    #[error("{path} is locked by another run; remove the lock file if that run is gone")]
    Locked { path: PathBuf },
    #[error("cannot write {path}: {source}")]
    Storage {
        path: PathBuf,
        #[source]
        source: IoError,
    },
}

impl CliError {
    /// Process exit status: 2 config, 3 numerical, 4 cache or storage.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::StageDependencyMissing { .. } => 2,
            CliError::Numerical { .. } => 3,
            CliError::Locked { .. } | CliError::Storage { .. } => 4,
        }
    }

    pub(crate) fn numerical(stage: Stage) -> impl FnOnce(NumericalError) -> CliError {
        move |source| CliError::Numerical { stage, source }
    }
}

pub(crate) fn storage(path: impl Into<PathBuf>) -> impl FnOnce(IoError) -> CliError {
    let path = path.into();
    move |source| CliError::Storage { path, source }
}

pub(crate) fn storage_io(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> CliError {
    let path = path.into();
    move |e| CliError::Storage {
        path,
        source: IoError::Io(e),
    }
}

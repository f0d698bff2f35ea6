//! Crate-level error and the exit codes the CLI and FFI report.

use std::io;
use std::path::PathBuf;

use crate::sim::config::ConfigError;
use crate::sim::runner::SimError;
use crate::sim::trace::TraceError;
use crate::synthesis::SynthesisError;

pub mod exit {
    pub const OK: i32 = 0;
    pub const IO: i32 = 1;
    pub const USAGE: i32 = 2;
    pub const UNKNOWN_SCENARIO: i32 = 3;
    pub const MALFORMED_CONFIG: i32 = 4;
    pub const MISSING_FILE: i32 = 5;
    pub const SIMULATION: i32 = 6;
    pub const SYNTHESIS: i32 = 7;
    pub const VERIFICATION: i32 = 8;
}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Simulation(#[from] SimError),
    #[error(transparent)]
    Synthesis(#[from] SynthesisError),
    #[error(transparent)]
    Trace(#[from] TraceError),
    #[error("verification failed: {0}")]
    Verification(String),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
}

fn io_code(e: &io::Error) -> i32 {
    if e.kind() == io::ErrorKind::NotFound {
        exit::MISSING_FILE
    } else {
        exit::IO
    }
}

fn config_code(e: &ConfigError) -> i32 {
    match e {
        ConfigError::UnknownScenario(_) => exit::UNKNOWN_SCENARIO,
        ConfigError::Io { source, .. } => io_code(source),
        ConfigError::Invalid(_) | ConfigError::Parse { .. } | ConfigError::GainSource(_) => exit::MALFORMED_CONFIG,
    }
}

fn synthesis_code(e: &SynthesisError) -> i32 {
    match e {
        SynthesisError::Io { source, .. } => io_code(source),
        SynthesisError::Format { .. } => exit::MALFORMED_CONFIG,
        _ => exit::SYNTHESIS,
    }
}

impl Error {
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(e) => config_code(e),
            Error::Simulation(SimError::Config(e)) => config_code(e),
            Error::Simulation(SimError::Gains(e)) => synthesis_code(e),
            Error::Simulation(_) => exit::SIMULATION,
            Error::Synthesis(e) => synthesis_code(e),
            Error::Trace(TraceError::Io { source, .. }) => io_code(source),
            Error::Trace(_) => exit::MALFORMED_CONFIG,
            Error::Verification(_) => exit::VERIFICATION,
            Error::Io { source, .. } => io_code(source),
        }
    }
}

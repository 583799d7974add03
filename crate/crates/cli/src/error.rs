use std::fmt;

use vesselid_core::evalkit::DatasetError;
use vesselid_core::gateway::GatewayError;
use vesselid_core::identify::IdentifyError;
use vesselid_core::imaging::ImagingError;

/// Command failure, mapped onto the process exit code.
#[derive(Debug)]
pub enum CliError {
    /// Bad flags or flag combinations (exit 1).
    Usage(String),
    /// Unreadable or invalid input data or configuration (exit 2).
    Data(String),
    /// Environment failures: I/O, sockets, threads (exit 3).
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
            CliError::Runtime(_) => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Data(m) | CliError::Runtime(m) => f.write_str(m),
        }
    }
}

impl std::error::Error for CliError {}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}

impl From<IdentifyError> for CliError {
    fn from(e: IdentifyError) -> Self {
        match e {
            IdentifyError::Io(e) => CliError::Runtime(e.to_string()),
            e => CliError::Data(e.to_string()),
        }
    }
}

impl From<DatasetError> for CliError {
    fn from(e: DatasetError) -> Self {
        match e {
            DatasetError::Io(e) => CliError::Runtime(e.to_string()),
            e => CliError::Data(e.to_string()),
        }
    }
}

impl From<GatewayError> for CliError {
    fn from(e: GatewayError) -> Self {
        match e {
            GatewayError::Io(e) => CliError::Runtime(e.to_string()),
            e => CliError::Data(e.to_string()),
        }
    }
}

impl From<ImagingError> for CliError {
    fn from(e: ImagingError) -> Self {
        CliError::Data(e.to_string())
    }
}

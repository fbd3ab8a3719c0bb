use std::process::ExitCode;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("runtime failure: {0}")]
    Runtime(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("assertion failed: {0}")]
    Assert(String),
}

impl CliError {
    pub fn config(e: wickns_core::Error) -> Self {
        Self::Config(e.to_string())
    }

    pub fn runtime(e: wickns_core::Error) -> Self {
        Self::Runtime(e.to_string())
    }

    pub fn exit_code(&self) -> ExitCode {
        ExitCode::from(match self {
            Self::Config(_) => 1,
            Self::Runtime(_) | Self::Io(_) => 2,
            Self::Assert(_) => 3,
        })
    }
}

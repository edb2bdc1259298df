use std::path::Path;

/// Everything a subcommand can fail with. Each variant owns one exit code.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Ran to completion but the result misses its target (not converged,
    /// constraints unmet).
    #[error("{0}")]
    Unsatisfied(String),
    /// Bad program text, config or arguments.
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{0}")]
    DoorInaccessible(String),
    /// Predictions that do not line up with the task file.
    #[error("{0}")]
    Mismatch(String),
}

impl CliError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io { path: path.display().to_string(), source }
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Unsatisfied(_) => 1,
            CliError::Usage(_) => 2,
            CliError::Io { .. } => 3,
            CliError::DoorInaccessible(_) => 4,
            CliError::Mismatch(_) => 5,
        }
    }
}

impl From<roomgen::planner::PlanError> for CliError {
    fn from(e: roomgen::planner::PlanError) -> Self {
        match e {
            roomgen::planner::PlanError::DoorInaccessible => CliError::DoorInaccessible(e.to_string()),
            other => CliError::Usage(other.to_string()),
        }
    }
}

impl From<roomgen::layout::LayoutError> for CliError {
    fn from(e: roomgen::layout::LayoutError) -> Self {
        CliError::Usage(e.to_string())
    }
}

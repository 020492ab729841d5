//! Process-level error classification: exit code 1 for usage, 2 for
//! validation failures, 3 for solver failures.

use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Usage,
    Validation,
    Solver,
}

#[derive(Debug)]
pub struct CliError {
    pub kind: ErrorKind,
    pub message: String,
}

impl CliError {
    pub fn usage(message: impl Into<String>) -> Self {
        Self {
            kind: ErrorKind::Usage,
            message: message.into(),
        }
    }

    pub fn validation(message: impl Into<String>) -> Self {
        Self {
            kind: ErrorKind::Validation,
            message: message.into(),
        }
    }

    pub fn solver(message: impl Into<String>) -> Self {
        Self {
            kind: ErrorKind::Solver,
            message: message.into(),
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self.kind {
            ErrorKind::Usage => 1,
            ErrorKind::Validation => 2,
            ErrorKind::Solver => 3,
        }
    }

    pub fn kind_str(&self) -> &'static str {
        match self.kind {
            ErrorKind::Usage => "usage",
            ErrorKind::Validation => "validation",
            ErrorKind::Solver => "solver",
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.kind_str(), self.message)
    }
}

impl std::error::Error for CliError {}

impl From<blameless_core::blameless::BlamelessError> for CliError {
    fn from(e: blameless_core::blameless::BlamelessError) -> Self {
        CliError::solver(e.to_string())
    }
}

impl From<blameless_core::ocp::OcpError> for CliError {
    fn from(e: blameless_core::ocp::OcpError) -> Self {
        CliError::solver(e.to_string())
    }
}

impl From<blameless_core::objective::ObjectiveError> for CliError {
    fn from(e: blameless_core::objective::ObjectiveError) -> Self {
        CliError::validation(e.to_string())
    }
}

impl From<blameless_core::dynamics::DynamicsError> for CliError {
    fn from(e: blameless_core::dynamics::DynamicsError) -> Self {
        CliError::validation(e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::usage(format!("io error: {e}"))
    }
}

use std::fmt;

use gibbsmax_core::Error as CoreError;

/// Exit code for success.
pub const EXIT_OK: i32 = 0;
/// Exit code for invalid configuration or input.
pub const EXIT_CONFIG: i32 = 1;
/// Exit code when a proved bound is reported violated.
pub const EXIT_VIOLATED: i32 = 2;
/// Exit code when the quadrature oracle and Monte Carlo disagree.
pub const EXIT_ORACLE_MISMATCH: i32 = 3;

#[derive(Debug)]
pub enum CliError {
    /// Bad configuration, flags or ensemble.
    Config(String),
    /// Numerical or domain error raised by the core crate.
    Core(CoreError),
    /// Output could not be written.
    Io(std::io::Error),
}

impl CliError {
    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Config(_) => "config",
            CliError::Core(_) => "input",
            CliError::Io(_) => "io",
        }
    }

    /// One line of JSON: `{"error":"<kind>","message":"..."}`.
    pub fn to_json_line(&self) -> String {
        serde_json::json!({ "error": self.kind(), "message": self.to_string() }).to_string()
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) => f.write_str(m),
            CliError::Core(e) => write!(f, "{e}"),
            CliError::Io(e) => write!(f, "{e}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        CliError::Core(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e)
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Io(std::io::Error::other(e))
    }
}

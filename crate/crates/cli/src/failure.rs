use crate::config::ConfigError;
use std::fmt;

/// Everything that ends a run early, mapped to an exit code.
#[derive(Debug)]
pub enum Failure {
    Config(String),
    Core(bilattice::Error),
    Io(std::io::Error),
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Config(_) => 2,
            Failure::Core(e) if e.is_config() => 2,
            Failure::Core(_) => 3,
            Failure::Io(_) => 1,
        }
    }

    pub fn code(&self) -> &'static str {
        match self {
            Failure::Config(_) => "config",
            Failure::Core(e) => e.code(),
            Failure::Io(_) => "io",
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let detail = match self {
            Failure::Config(m) => m.clone(),
            Failure::Core(e) => e.to_string(),
            Failure::Io(e) => e.to_string(),
        };
        // one line, whatever the detail contains
        write!(f, "error: {}: {}", self.code(), detail.replace('\n', " "))
    }
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Config(e.to_string())
    }
}

impl From<bilattice::Error> for Failure {
    fn from(e: bilattice::Error) -> Self {
        Failure::Core(e)
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Io(e)
    }
}

pub type Outcome<T> = Result<T, Failure>;

use std::path::PathBuf;

use maskedsgd_core::Error as CoreError;

pub type Result<T> = std::result::Result<T, HarnessError>;

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error(transparent)]
    Core(#[from] CoreError),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// `line` is 1-based; 0 when the problem is not tied to a line.
    #[error("config error{}: {msg}", if *line > 0 { format!(" at line {line}") } else { String::new() })]
    Config { line: usize, msg: String },

    #[error("{path}: malformed {what}: {msg}")]
    Format {
        path: String,
        what: &'static str,
        msg: String,
    },

    #[error("all {trials} trials diverged")]
    AllTrialsDiverged { trials: usize },
}

impl HarnessError {
    pub fn config(msg: impl Into<String>) -> Self {
        HarnessError::Config {
            line: 0,
            msg: msg.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        HarnessError::Io {
            path: path.into(),
            source,
        }
    }

    /// 2 for numerical failures, 1 for everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Core(e) if e.is_numerical() => 2,
            HarnessError::AllTrialsDiverged { .. } => 2,
            _ => 1,
        }
    }
}

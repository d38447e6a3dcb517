use thiserror::Error;

/// Error taxonomy shared by every module in the workspace.
///
/// The CLI maps these onto process exit codes: configuration problems exit
/// with 2, trace problems with 3, and anything that aborts a run with 4.
#[derive(Debug, Error)]
pub enum Error {
    /// Invalid configuration: bad TOML, unknown keys, out-of-range values.
    #[error("config error: {0}")]
    Config(String),

    /// Malformed or inconsistent input trace data.
    #[error("trace error: {}{msg}", .line.map(|l| format!("line {l}: ")).unwrap_or_default())]
    Trace { line: Option<usize>, msg: String },

    /// A tensor or observation had the wrong width for the configured model.
    #[error("dimension mismatch in {what}: expected {expected}, got {got}")]
    Dimension {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    /// Non-finite values where finite numbers are required.
    #[error("numeric error: {0}")]
    Numeric(String),

    /// Corrupt, truncated, or incompatible checkpoint file.
    #[error("checkpoint error: {0}")]
    Checkpoint(String),

    /// A training or evaluation run aborted.
    #[error("run error: {0}")]
    Run(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub fn trace(line: Option<usize>, msg: impl Into<String>) -> Self {
        Error::Trace {
            line,
            msg: msg.into(),
        }
    }

    pub fn numeric(msg: impl Into<String>) -> Self {
        Error::Numeric(msg.into())
    }

    pub fn checkpoint(msg: impl Into<String>) -> Self {
        Error::Checkpoint(msg.into())
    }

    pub fn run(msg: impl Into<String>) -> Self {
        Error::Run(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trace_error_mentions_line() {
        let e = Error::trace(Some(17), "timestamp out of order");
        assert_eq!(e.to_string(), "trace error: line 17: timestamp out of order");
        let e = Error::trace(None, "missing header");
        assert_eq!(e.to_string(), "trace error: missing header");
    }
}

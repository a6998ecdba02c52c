use std::path::Path;

use almask_core::ErrorKind;

/// Process-level failure with a stable exit code mapping.
///
/// 2 means the inputs were bad (config, file format, unreadable input);
/// 3 means the run itself broke (numeric failure, output write failure).
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("format error in {path}: {msg}")]
    Format { path: String, msg: String },
    #[error("cannot read {path}: {source}")]
    Read {
        path: String,
        source: std::io::Error,
    },
    #[error("cannot write {path}: {source}")]
    Write {
        path: String,
        source: std::io::Error,
    },
    #[error(transparent)]
    Core(#[from] almask_core::Error),
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    pub fn config(msg: impl Into<String>) -> Self {
        CliError::Config(msg.into())
    }

    pub fn format(path: &Path, msg: impl Into<String>) -> Self {
        CliError::Format {
            path: path.display().to_string(),
            msg: msg.into(),
        }
    }

    pub fn read(path: &Path, source: std::io::Error) -> Self {
        CliError::Read {
            path: path.display().to_string(),
            source,
        }
    }

    pub fn write(path: &Path, source: std::io::Error) -> Self {
        CliError::Write {
            path: path.display().to_string(),
            source,
        }
    }

    /// Prefix the message with context (e.g. which strategy failed) while
    /// keeping the variant, so the exit code mapping is unchanged.
    pub fn with_note(self, note: &str) -> Self {
        let retag = |e: std::io::Error, note: &str| {
            std::io::Error::new(e.kind(), format!("{note}: {e}"))
        };
        match self {
            CliError::Config(m) => CliError::Config(format!("{note}: {m}")),
            CliError::Format { path, msg } => CliError::Format {
                path,
                msg: format!("{note}: {msg}"),
            },
            CliError::Read { path, source } => CliError::Read {
                path,
                source: retag(source, note),
            },
            CliError::Write { path, source } => CliError::Write {
                path,
                source: retag(source, note),
            },
            CliError::Core(e) => CliError::Core(e.with_context(note)),
            CliError::Runtime(m) => CliError::Runtime(format!("{note}: {m}")),
        }
    }

    /// 0 is reserved for success; never returned here.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) | CliError::Format { .. } | CliError::Read { .. } => 2,
            CliError::Write { .. } | CliError::Runtime(_) => 3,
            CliError::Core(e) => match e.kind() {
                ErrorKind::Config | ErrorKind::Resource => 2,
                ErrorKind::Contract | ErrorKind::Numeric => 3,
            },
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn input_side_failures_map_to_two() {
        assert_eq!(CliError::config("x").exit_code(), 2);
        assert_eq!(CliError::format(Path::new("f"), "bad magic").exit_code(), 2);
        let io = std::io::Error::new(std::io::ErrorKind::NotFound, "gone");
        assert_eq!(CliError::read(Path::new("f"), io).exit_code(), 2);
    }

    #[test]
    fn run_side_failures_map_to_three() {
        let io = std::io::Error::new(std::io::ErrorKind::PermissionDenied, "ro");
        assert_eq!(CliError::write(Path::new("f"), io).exit_code(), 3);
        assert_eq!(CliError::Runtime("boom".into()).exit_code(), 3);
    }
}

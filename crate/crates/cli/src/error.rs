use std::fmt::Display;
use std::path::Path;

/// A failed run: `code` 2 for bad input, 1 for everything else.
#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub kind: String,
    pub message: String,
}

impl CliError {
    pub fn usage(kind: &str, message: impl Into<String>) -> Self {
        CliError {
            code: 2,
            kind: kind.into(),
            message: message.into(),
        }
    }

    pub fn runtime(err: impl Display) -> Self {
        CliError {
            code: 1,
            kind: "runtime".into(),
            message: err.to_string(),
        }
    }

    pub fn io(path: &Path, err: impl Display) -> Self {
        CliError {
            code: 1,
            kind: "io".into(),
            message: format!("{}: {err}", path.display()),
        }
    }

    /// The single line printed on stderr.
    pub fn line(&self) -> String {
        serde_json::json!({ "error": self.kind, "message": self.message }).to_string()
    }
}

impl From<perclab::Error> for CliError {
    fn from(e: perclab::Error) -> Self {
        CliError {
            code: if e.is_validation() { 2 } else { 1 },
            kind: e.kind().into(),
            message: e.to_string(),
        }
    }
}

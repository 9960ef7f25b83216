//! Failure reporting: every failure is one JSON line on stderr.

use std::fmt;
use std::path::Path;

use serde_json::json;

pub const EXIT_DATA: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug)]
pub enum CliError {
    /// Invalid flags or flag values; nothing was read.
    Usage(String),
    /// Input that does not parse or does not fit together.
    Data {
        file: String,
        line: Option<usize>,
        message: String,
    },
}

impl CliError {
    pub fn data(file: &Path, line: Option<usize>, message: impl fmt::Display) -> Self {
        CliError::Data {
            file: file.display().to_string(),
            line,
            message: strip_line_prefix(message.to_string(), line),
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Data { .. } => EXIT_DATA,
        }
    }

    pub fn to_json(&self) -> String {
        match self {
            CliError::Usage(message) => json!({ "error": "usage", "message": message }),
            CliError::Data {
                file,
                line,
                message,
            } => json!({ "error": "data", "file": file, "line": line, "message": message }),
        }
        .to_string()
    }
}

/// Core errors often start with their own `line N: `; the JSON carries the
/// line separately.
fn strip_line_prefix(message: String, line: Option<usize>) -> String {
    match line {
        Some(l) => match message.strip_prefix(&format!("line {l}: ")) {
            Some(rest) => rest.to_string(),
            None => message,
        },
        None => message,
    }
}

pub type Result<T> = std::result::Result<T, CliError>;

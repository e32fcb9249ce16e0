//! Documents, tabular output and drawings.

pub mod config;
pub mod output;
pub mod scenario;
pub mod svg;

use std::path::{Path, PathBuf};

use thiserror::Error;

pub use config::{ConfigDocument, PresetName};
pub use scenario::ScenarioDocument;

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{what}: {msg} at line {line}, column {column}")]
    Json { what: &'static str, msg: String, line: usize, column: usize },
    #[error("{0}")]
    Document(String),
    #[error("{path}: {source}")]
    File { path: PathBuf, source: std::io::Error },
}

impl IoError {
    fn json(what: &'static str, e: serde_json::Error) -> Self {
        // serde_json appends its own position to the message
        let msg = e.to_string();
        let msg = match msg.rfind(" at line ") {
            Some(k) => msg[..k].to_string(),
            None => msg,
        };
        IoError::Json { what, msg, line: e.line(), column: e.column() }
    }

    pub fn file(path: &Path, source: std::io::Error) -> Self {
        IoError::File { path: path.to_path_buf(), source }
    }
}

pub fn read_text(path: &Path) -> Result<String, IoError> {
    std::fs::read_to_string(path).map_err(|e| IoError::file(path, e))
}

pub fn write_text(path: &Path, text: &str) -> Result<(), IoError> {
    std::fs::write(path, text).map_err(|e| IoError::file(path, e))
}

/// Formats to 9 significant digits with a period separator and no exponent.
pub fn fmt9(x: f64) -> String {
    if !x.is_finite() {
        return if x.is_nan() { "nan".into() } else if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let r: f64 = format!("{x:.8e}").parse().expect("round trip of formatted float");
    if r == 0.0 {
        return "0".into();
    }
    format!("{r}")
}

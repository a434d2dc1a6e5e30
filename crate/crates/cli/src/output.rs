//! Output plumbing: deterministic JSON/CSV rendering and file writing.
//!
//! CSV is stable-ordered and locale-independent: fixed column order, `.`
//! decimal point from Rust's float formatting, `\n` line endings, and the
//! effective configuration echoed as leading `# key = value` comment
//! lines in sorted key order.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use serde::Serialize;

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Csv,
    Json,
}

impl OutputFormat {
    pub fn resolve(flag: Option<&str>, default: OutputFormat) -> OutputFormat {
        match flag {
            Some("csv") => OutputFormat::Csv,
            Some("json") => OutputFormat::Json,
            _ => default,
        }
    }
}

pub fn to_json<T: Serialize>(doc: &T) -> Result<String, CliError> {
    serde_json::to_string_pretty(doc)
        .map(|mut s| {
            s.push('\n');
            s
        })
        .map_err(|e| CliError::Runtime(format!("serializing report: {e}")))
}

/// Leading comment block echoing the effective configuration.
pub fn csv_config_header(config: &BTreeMap<String, String>) -> String {
    let mut out = String::new();
    for (key, value) in config {
        out.push_str("# ");
        out.push_str(key);
        out.push_str(" = ");
        out.push_str(value);
        out.push('\n');
    }
    out
}

/// One CSV line from already-formatted fields.
pub fn csv_line(fields: &[String]) -> String {
    let mut line = fields.join(",");
    line.push('\n');
    line
}

pub fn fmt_f64(v: f64) -> String {
    format!("{v}")
}

pub fn write_output(path: Option<&Path>, content: &str) -> Result<(), CliError> {
    match path {
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(content.as_bytes())
                .map_err(|e| CliError::Runtime(format!("writing to stdout: {e}")))
        }
        Some(p) => std::fs::write(p, content)
            .map_err(|e| CliError::Runtime(format!("writing {}: {e}", p.display()))),
    }
}

pub fn write_file(path: &Path, content: &str) -> Result<(), CliError> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)
                .map_err(|e| CliError::Runtime(format!("creating {}: {e}", parent.display())))?;
        }
    }
    std::fs::write(path, content)
        .map_err(|e| CliError::Runtime(format!("writing {}: {e}", path.display())))
}

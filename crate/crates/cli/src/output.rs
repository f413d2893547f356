use std::fmt;
use std::fs;
use std::path::Path;

use serde_json::Value;

#[derive(Debug)]
pub enum CliError {
    /// Bad parameters for an otherwise well-formed request.
    Usage(String),
    /// A file could not be read, written or parsed.
    Io(String),
    /// The report was written but a checked inequality failed.
    Verdict(String),
}

impl CliError {
    pub fn code(&self) -> u8 {
        match self {
            CliError::Verdict(_) => 1,
            CliError::Usage(_) => 2,
            CliError::Io(_) => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(msg) | CliError::Io(msg) => f.write_str(msg),
            CliError::Verdict(msg) => write!(f, "check failed: {msg}"),
        }
    }
}

impl From<rbpebble::Error> for CliError {
    fn from(e: rbpebble::Error) -> CliError {
        CliError::Usage(e.to_string())
    }
}

/// A command's JSON report and, for checking commands, the failures found.
pub struct Report {
    pub body: Value,
    pub failures: Vec<String>,
}

impl Report {
    pub fn new(body: Value) -> Report {
        Report { body, failures: Vec::new() }
    }

    pub fn check(mut self, ok: bool, what: &str) -> Report {
        if !ok {
            self.failures.push(what.to_string());
        }
        self
    }
}

pub fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::Io(format!("cannot read {}: {e}", path.display())))
}

pub fn write(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))
}

fn scalar(v: &Value) -> Option<String> {
    match v {
        Value::Null => Some("-".into()),
        Value::Bool(b) => Some(b.to_string()),
        Value::Number(n) => Some(n.to_string()),
        Value::String(s) => Some(s.clone()),
        _ => None,
    }
}

/// Two-column table of the top-level fields; nested values stay JSON.
fn table(body: &Value) -> String {
    let Value::Object(map) = body else {
        return body.to_string() + "\n";
    };
    let width = map.keys().map(String::len).max().unwrap_or(0);
    let mut text = String::new();
    for (key, v) in map {
        let cell = match v {
            Value::Array(items) if items.iter().all(|i| scalar(i).is_some()) => {
                items.iter().filter_map(scalar).collect::<Vec<_>>().join(" ")
            }
            _ => scalar(v).unwrap_or_else(|| v.to_string()),
        };
        text += &format!("{key:<width$}  {cell}\n");
    }
    text
}

pub fn emit(report: &Report, out: Option<&Path>, pretty: bool) -> Result<(), CliError> {
    let text = if pretty { table(&report.body) } else { report.body.to_string() + "\n" };
    match out {
        Some(path) => write(path, &text)?,
        None => print!("{text}"),
    }
    if report.failures.is_empty() {
        Ok(())
    } else {
        Err(CliError::Verdict(report.failures.join("; ")))
    }
}

use std::fmt;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

#[derive(Debug)]
pub enum CliError {
    /// Unreadable or schema-violating configuration.
    Config(String),
    Core(qdp_core::Error),
    Io(io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Core(_) | CliError::Io(_) => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "config: {m}"),
            CliError::Core(e) => write!(f, "{e}"),
            CliError::Io(e) => write!(f, "io: {e}"),
        }
    }
}

impl From<qdp_core::Error> for CliError {
    fn from(e: qdp_core::Error) -> Self {
        match e {
            qdp_core::Error::InvalidParameter { .. } => CliError::Config(e.to_string()),
            other => CliError::Core(other),
        }
    }
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        CliError::Io(e)
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Io(io::Error::other(e))
    }
}

/// Parsed configuration document plus the hash of its canonical form.
pub struct RawConfig {
    value: Option<Value>,
    pub hash: Option<String>,
}

impl RawConfig {
    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        let Some(path) = path else {
            return Ok(Self {
                value: None,
                hash: None,
            });
        };
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        let value: Value = serde_json::from_str(&text)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        // serde_json sorts object keys, so this is independent of key order and whitespace
        let canonical = serde_json::to_vec(&value).expect("a parsed value serializes");
        let hash = hex::encode(Sha256::digest(&canonical));
        Ok(Self {
            value: Some(value),
            hash: Some(hash),
        })
    }

    /// Deserializes into `T`, naming the offending key path on failure.
    pub fn parse<T: DeserializeOwned>(&self) -> Result<Option<T>, CliError> {
        let Some(v) = &self.value else {
            return Ok(None);
        };
        serde_path_to_error::deserialize(v.clone())
            .map(Some)
            .map_err(|e| CliError::Config(format!("at `{}`: {}", e.path(), e.inner())))
    }

    pub fn require<T: DeserializeOwned>(&self, command: &str) -> Result<T, CliError> {
        self.parse()?
            .ok_or_else(|| CliError::Config(format!("{command} needs --config <file.json>")))
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Json,
    Csv,
}

impl Format {
    fn extension(self) -> &'static str {
        match self {
            Format::Json => "json",
            Format::Csv => "csv",
        }
    }
}

/// A command result in both shapes.
pub struct Report {
    pub json: Value,
    pub headers: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Report {
    pub fn new(json: Value, headers: &[&str], rows: Vec<Vec<String>>) -> Self {
        Self {
            json,
            headers: headers.iter().map(|h| h.to_string()).collect(),
            rows,
        }
    }
}

pub fn destination(
    out: Option<PathBuf>,
    out_dir: Option<PathBuf>,
    command: &str,
    format: Format,
) -> Option<PathBuf> {
    out.or_else(|| out_dir.map(|d| d.join(format!("{command}.{}", format.extension()))))
}

pub fn emit(
    command: &str,
    seed: u64,
    config: &RawConfig,
    report: Report,
    format: Format,
    target: Option<&Path>,
) -> Result<(), CliError> {
    let hash = config
        .hash
        .clone()
        .unwrap_or_else(|| "defaults".to_string());
    let mut buf: Vec<u8> = Vec::new();
    match format {
        Format::Json => {
            let doc = json!({
                "command": command,
                "seed": seed,
                "config_hash": hash,
                "result": report.json,
            });
            serde_json::to_writer_pretty(&mut buf, &doc).expect("report serializes");
            buf.push(b'\n');
        }
        Format::Csv => {
            let mut w = csv::Writer::from_writer(&mut buf);
            let mut header = report.headers.clone();
            header.extend(["seed".to_string(), "config_hash".to_string()]);
            w.write_record(&header)?;
            for row in &report.rows {
                let mut r = row.clone();
                r.extend([seed.to_string(), hash.clone()]);
                w.write_record(&r)?;
            }
            w.flush()?;
        }
    }
    match target {
        Some(path) => {
            if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
                fs::create_dir_all(parent)?;
            }
            fs::write(path, &buf)?;
        }
        None => io::stdout().write_all(&buf)?,
    }
    Ok(())
}

//! Result printing, output files and the run manifest.

use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;
use serde_json::Value;

use crate::args::Format;
use crate::error::CliError;

/// Record of a run: what was asked and with which resolved settings.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub config: Value,
    pub tool_version: String,
    /// Seconds since the Unix epoch.
    pub timestamp: u64,
    pub seed: u64,
}

impl RunManifest {
    pub fn new(command: &str, config: Value, seed: u64) -> Self {
        Self {
            command: command.to_string(),
            config,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            timestamp: SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0),
            seed,
        }
    }
}

pub struct Context {
    pub out: Option<PathBuf>,
    pub format: Format,
    pub seed: u64,
    pub manifest: RunManifest,
}

/// Result of a subcommand in both output formats.
pub struct Report {
    pub stem: String,
    pub json: Value,
    pub csv: String,
}

impl Context {
    /// Prints the report to stdout and, with `--out`, writes it next to the manifest.
    pub fn emit(&self, report: &Report) -> Result<(), CliError> {
        let text = match self.format {
            Format::Json => serde_json::to_string_pretty(&report.json)? + "\n",
            Format::Csv => report.csv.clone(),
        };
        print!("{text}");
        if let Some(dir) = &self.out {
            let ext = match self.format {
                Format::Json => "json",
                Format::Csv => "csv",
            };
            self.write(dir, &format!("{}.{ext}", report.stem), text.as_bytes())?;
            self.write_manifest(dir)?;
        }
        Ok(())
    }

    pub fn write(&self, dir: &Path, name: &str, contents: &[u8]) -> Result<PathBuf, CliError> {
        std::fs::create_dir_all(dir)?;
        let path = dir.join(name);
        std::fs::write(&path, contents)?;
        Ok(path)
    }

    pub fn write_manifest(&self, dir: &Path) -> Result<PathBuf, CliError> {
        let text = serde_json::to_string_pretty(&self.manifest)? + "\n";
        self.write(dir, "manifest.json", text.as_bytes())
    }
}

/// CSV text from a header and rows.
pub fn csv_table(header: &[&str], rows: &[Vec<String>]) -> Result<String, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for row in rows {
        w.write_record(row)?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::Io(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
}

/// Formats an optional number, leaving the CSV field empty for `None`.
pub fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

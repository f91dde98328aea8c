//! Command-line flags and the matching config-file layout.
//!
//! Every subcommand flag may also be given in the `[<subcommand>]` table of
//! the TOML file passed with `--config`; flags win over file values.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Parser)]
#[command(name = "fxdiff", version, about = "Fixed-time convergent robust exact differentiators")]
pub struct Cli {
    /// Directory for output files and the run manifest.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Seed for measurement noise.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Format of the result printed to stdout (and written under --out).
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// TOML file with defaults for any flag.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    #[default]
    Json,
}

#[derive(Debug, Subcommand)]
#[allow(clippy::large_enum_variant)]
pub enum Command {
    /// Check the DGF properties and compute the admissibility constants.
    Check(CheckArgs),
    /// Gains for a prescribed convergence-time bound.
    Tune(TuneArgs),
    /// Bounds T~ for the reference gains of both built-in DGFs.
    Table1,
    /// Convergence time from an initial error, or the global bounds.
    Convtime(ConvtimeArgs),
    /// Simulate the differentiator (figure presets or custom runs).
    Sim(SimArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Check(_) => "check",
            Command::Tune(_) => "tune",
            Command::Table1 => "table1",
            Command::Convtime(_) => "convtime",
            Command::Sim(_) => "sim",
        }
    }
}

/// Fields present in both the flag set and the config table.
pub trait Merge: Sized {
    /// Values in `self` take precedence over those in `file`.
    fn merge(self, file: Self) -> Self;
}

macro_rules! merge_impl {
    ($ty:ty { $($field:ident),* $(,)? }) => {
        impl Merge for $ty {
            fn merge(self, file: Self) -> Self {
                Self { $($field: self.$field.or(file.$field)),* }
            }
        }
    };
}

/// Selects a built-in DGF or defines one from expressions in `x`.
#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default)]
pub struct DgfArgs {
    /// Built-in DGF id (sqrt, ured, exp) or "custom".
    #[arg(long)]
    pub dgf: Option<String>,
    /// Custom Phi(x), e.g. "sign(x)*(sqrt(abs(x)) + abs(x)^1.5)".
    #[arg(long)]
    pub phi: Option<String>,
    /// Custom Phi'(x); finite differences are used when omitted.
    #[arg(long)]
    pub phi_prime: Option<String>,
    /// Custom Phi''(x); finite differences are used when omitted.
    #[arg(long)]
    pub phi_second: Option<String>,
    /// Custom inverse of Phi; numerical inversion is used when omitted.
    #[arg(long)]
    pub phi_inverse: Option<String>,
    /// Name reported for a custom DGF.
    #[arg(long)]
    pub dgf_name: Option<String>,
}
merge_impl!(DgfArgs { dgf, phi, phi_prime, phi_second, phi_inverse, dgf_name });

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default)]
pub struct CheckArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub dgf: DgfArgs,
}

impl Merge for CheckArgs {
    fn merge(self, file: Self) -> Self {
        Self {
            dgf: self.dgf.merge(file.dgf),
        }
    }
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default)]
pub struct TuneArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub dgf: DgfArgs,
    /// Lipschitz bound on the second derivative of the signal.
    #[arg(long = "L")]
    #[serde(rename = "L")]
    pub l: Option<f64>,
    /// Prescribed convergence-time bound.
    #[arg(long = "T")]
    #[serde(rename = "T")]
    pub t: Option<f64>,
    /// Tradeoff parameter (> L); defaults to 4.5·max(L, 1).
    #[arg(long)]
    pub gamma: Option<f64>,
    /// Normalized k1 (k2 = k3 = 1); defaults to sqrt(8).
    #[arg(long)]
    pub k1_tilde: Option<f64>,
    /// Verified bound T~ for the normalized gains; defaults to the analytic
    /// bound rounded up to one decimal.
    #[arg(long)]
    pub ttilde: Option<f64>,
}

impl Merge for TuneArgs {
    fn merge(self, file: Self) -> Self {
        Self {
            dgf: self.dgf.merge(file.dgf),
            l: self.l.or(file.l),
            t: self.t.or(file.t),
            gamma: self.gamma.or(file.gamma),
            k1_tilde: self.k1_tilde.or(file.k1_tilde),
            ttilde: self.ttilde.or(file.ttilde),
        }
    }
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default)]
pub struct ConvtimeArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub dgf: DgfArgs,
    #[arg(long)]
    pub k1: Option<f64>,
    #[arg(long)]
    pub k2: Option<f64>,
    #[arg(long)]
    pub k3: Option<f64>,
    /// Initial position error f - y1.
    #[arg(long, allow_hyphen_values = true)]
    pub x1: Option<f64>,
    /// Initial derivative error f' - y2.
    #[arg(long, allow_hyphen_values = true)]
    pub x2: Option<f64>,
    /// Report the global convergence time and its analytic bounds.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub global: Option<bool>,
    /// Lipschitz bound for the perturbed convergence-time bound.
    #[arg(long = "L")]
    #[serde(rename = "L")]
    pub l: Option<f64>,
    /// Outer grid size of the global search.
    #[arg(long)]
    pub grid: Option<usize>,
}

impl Merge for ConvtimeArgs {
    fn merge(self, file: Self) -> Self {
        Self {
            dgf: self.dgf.merge(file.dgf),
            k1: self.k1.or(file.k1),
            k2: self.k2.or(file.k2),
            k3: self.k3.or(file.k3),
            x1: self.x1.or(file.x1),
            x2: self.x2.or(file.x2),
            global: self.global.or(file.global),
            l: self.l.or(file.l),
            grid: self.grid.or(file.grid),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Preset {
    /// Trajectory of the worked example.
    Fig1,
    /// Steady-state error versus measurement noise, against the super-twisting reference.
    Fig2,
    /// Convergence time versus initial slope.
    Fig3,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default)]
pub struct SimArgs {
    #[arg(long, value_enum)]
    pub preset: Option<Preset>,
    #[command(flatten)]
    #[serde(flatten)]
    pub dgf: DgfArgs,
    #[arg(long)]
    pub k1: Option<f64>,
    #[arg(long)]
    pub k2: Option<f64>,
    #[arg(long)]
    pub k3: Option<f64>,
    /// Lipschitz bound used to tune gains when k1, k2, k3 are not given.
    #[arg(long = "L")]
    #[serde(rename = "L")]
    pub l: Option<f64>,
    /// Convergence-time bound used to tune gains when k1, k2, k3 are not given.
    #[arg(long = "T")]
    #[serde(rename = "T")]
    pub t: Option<f64>,
    #[arg(long)]
    pub gamma: Option<f64>,
    /// Step size.
    #[arg(long)]
    pub ts: Option<f64>,
    #[arg(long)]
    pub horizon: Option<f64>,
    #[arg(long)]
    pub tol_x1: Option<f64>,
    #[arg(long)]
    pub tol_x2: Option<f64>,
    /// Uniform measurement-noise half-width.
    #[arg(long)]
    pub noise: Option<f64>,
    /// Signal: fig1 or slope (with --omega, --slope), or a CSV file via --signal-file.
    #[arg(long)]
    pub signal: Option<String>,
    #[arg(long)]
    pub omega: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub slope: Option<f64>,
    /// CSV with a column `f` (and optionally `f_dot`) sampled every --period.
    #[arg(long)]
    pub signal_file: Option<PathBuf>,
    #[arg(long)]
    pub period: Option<f64>,
    /// Initial estimate y1(0).
    #[arg(long, allow_hyphen_values = true)]
    pub y1: Option<f64>,
    /// Initial estimate y2(0).
    #[arg(long, allow_hyphen_values = true)]
    pub y2: Option<f64>,
    /// Slope sweep range "lo:hi:n" for fig3.
    #[arg(long)]
    pub slopes: Option<String>,
    /// Comma-separated noise amplitudes for fig2.
    #[arg(long)]
    pub amplitudes: Option<String>,
    /// Keep every n-th trajectory sample in the CSV.
    #[arg(long)]
    pub every: Option<usize>,
    /// Also write a gnuplot script for the output (on by default for presets).
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub plot: Option<bool>,
}

impl Merge for SimArgs {
    fn merge(self, file: Self) -> Self {
        Self {
            preset: self.preset.or(file.preset),
            dgf: self.dgf.merge(file.dgf),
            k1: self.k1.or(file.k1),
            k2: self.k2.or(file.k2),
            k3: self.k3.or(file.k3),
            l: self.l.or(file.l),
            t: self.t.or(file.t),
            gamma: self.gamma.or(file.gamma),
            ts: self.ts.or(file.ts),
            horizon: self.horizon.or(file.horizon),
            tol_x1: self.tol_x1.or(file.tol_x1),
            tol_x2: self.tol_x2.or(file.tol_x2),
            noise: self.noise.or(file.noise),
            signal: self.signal.or(file.signal),
            omega: self.omega.or(file.omega),
            slope: self.slope.or(file.slope),
            signal_file: self.signal_file.or(file.signal_file),
            period: self.period.or(file.period),
            y1: self.y1.or(file.y1),
            y2: self.y2.or(file.y2),
            slopes: self.slopes.or(file.slopes),
            amplitudes: self.amplitudes.or(file.amplitudes),
            every: self.every.or(file.every),
            plot: self.plot.or(file.plot),
        }
    }
}

/// Layout of the `--config` file.
#[derive(Debug, Default, Deserialize)]
#[serde(default)]
pub struct ConfigFile {
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub format: Option<Format>,
    pub check: CheckArgs,
    pub tune: TuneArgs,
    pub convtime: ConvtimeArgs,
    pub sim: SimArgs,
}

impl ConfigFile {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| CliError::Usage(format!("invalid config {}: {e}", path.display())))
    }

    pub fn parse(text: &str) -> Result<Self, String> {
        let table: toml::Table = toml::from_str(text).map_err(|e| e.to_string())?;
        for (key, value) in &table {
            let known = match key.as_str() {
                "out" | "seed" | "format" => continue,
                "check" => field_names(&CheckArgs::default()),
                "tune" => field_names(&TuneArgs::default()),
                "convtime" => field_names(&ConvtimeArgs::default()),
                "sim" => field_names(&SimArgs::default()),
                other => return Err(format!("unknown key '{other}'")),
            };
            let Some(section) = value.as_table() else {
                return Err(format!("'{key}' must be a table"));
            };
            if let Some(bad) = section.keys().find(|k| !known.contains(k)) {
                return Err(format!("unknown key '{bad}' in [{key}]"));
            }
        }
        toml::from_str(text).map_err(|e| e.to_string())
    }
}

fn field_names<T: Serialize>(value: &T) -> Vec<String> {
    match serde_json::to_value(value) {
        Ok(serde_json::Value::Object(map)) => map.keys().cloned().collect(),
        _ => Vec::new(),
    }
}

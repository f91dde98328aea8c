#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod args;
mod commands;
mod error;
mod output;
mod plots;
mod sim_cmd;

use std::process::ExitCode;

use clap::Parser;
use serde_json::Value;

use args::{Cli, Command, ConfigFile, Merge};
use error::CliError;
use output::{Context, RunManifest};

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(2) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let file = match &cli.config {
        Some(path) => ConfigFile::load(path)?,
        None => ConfigFile::default(),
    };
    let seed = cli.seed.or(file.seed).unwrap_or(0);
    let format = cli.format.or(file.format).unwrap_or_default();
    let out = cli.out.or(file.out);
    let command = match cli.command {
        Command::Check(a) => Command::Check(a.merge(file.check)),
        Command::Tune(a) => Command::Tune(a.merge(file.tune)),
        Command::Table1 => Command::Table1,
        Command::Convtime(a) => Command::Convtime(a.merge(file.convtime)),
        Command::Sim(a) => Command::Sim(a.merge(file.sim)),
    };
    let resolved = match &command {
        Command::Check(a) => serde_json::to_value(a)?,
        Command::Tune(a) => serde_json::to_value(a)?,
        Command::Table1 => Value::Object(Default::default()),
        Command::Convtime(a) => serde_json::to_value(a)?,
        Command::Sim(a) => serde_json::to_value(a)?,
    };
    let ctx = Context {
        out,
        format,
        seed,
        manifest: RunManifest::new(command.name(), resolved, seed),
    };
    match command {
        Command::Check(a) => commands::check(&ctx, a),
        Command::Tune(a) => commands::tune(&ctx, a),
        Command::Table1 => commands::table1(&ctx),
        Command::Convtime(a) => commands::convtime(&ctx, a),
        Command::Sim(a) => sim_cmd::sim(&ctx, a),
    }
}

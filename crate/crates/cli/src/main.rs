mod args;
mod commands;
mod config;

use std::ffi::OsString;
use std::process::ExitCode;

use clap::Parser;

use crate::args::Cli;

/// A failure reported as `error[category]: message` on one line.
#[derive(Debug)]
pub struct CliError {
    pub category: String,
    pub message: String,
}

impl CliError {
    pub fn new(category: &str, message: impl Into<String>) -> Self {
        CliError {
            category: category.into(),
            message: message.into(),
        }
    }

    pub fn usage(message: impl Into<String>) -> Self {
        CliError::new("usage", message)
    }

    pub fn config(message: impl Into<String>) -> Self {
        CliError::new("config", message)
    }

    fn exit_code(&self) -> u8 {
        match self.category.as_str() {
            "usage" | "config" => 2,
            _ => 1,
        }
    }
}

impl From<neighbor2vec::Error> for CliError {
    fn from(e: neighbor2vec::Error) -> Self {
        CliError::new(e.category(), e.to_string())
    }
}

fn run(args: Vec<OsString>) -> Result<(), CliError> {
    let args = config::merge_config_file(args)?;
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            // --help and --version
            let _ = e.print();
            return Ok(());
        }
        Err(e) => {
            let text = e.to_string();
            let first = text.lines().next().unwrap_or("invalid arguments");
            return Err(CliError::usage(first.trim_start_matches("error: ")));
        }
    };
    commands::dispatch(cli.command)
}

fn main() -> ExitCode {
    match run(std::env::args_os().collect()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error[{}]: {}", e.category, e.message.replace('\n', " "));
            ExitCode::from(e.exit_code())
        }
    }
}

mod args;
mod commands;
mod config;
mod manifest;

use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;

use args::{Cli, Command};

/// Bad flags or flag combinations.
#[derive(Debug)]
pub struct UsageError(pub String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn exit_code(err: &anyhow::Error) -> u8 {
    if err.downcast_ref::<UsageError>().is_some() {
        return 1;
    }
    if let Some(e) = err.downcast_ref::<insilico::Error>() {
        if e.is_validation() {
            return 1;
        }
    }
    2
}

/// Error chain joined with `: `, skipping causes the previous message
/// already ends with.
fn render(err: &anyhow::Error) -> String {
    let mut out = String::new();
    for cause in err.chain() {
        let text = cause.to_string();
        if out.ends_with(&text) {
            continue;
        }
        if !out.is_empty() {
            out.push_str(": ");
        }
        out.push_str(&text);
    }
    out
}

fn init_logging(verbose: bool) {
    let default = if verbose { "info" } else { "warn" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(default))
        .format_timestamp(None)
        .init();
}

fn threads(cmd: &Command) -> Option<usize> {
    match cmd {
        Command::Fit(a) => a.common.threads,
        Command::Interva(a) => a.common.threads,
        Command::Debias(a) => a.common.threads,
        Command::Evaluate(a) => a.common.threads,
        Command::Split(a) => a.common.threads,
        Command::Simulate(a) => a.common.threads,
        Command::Rankify(a) => a.common.threads,
        Command::Diagnose(a) => a.common.threads,
    }
}

fn run(cli: Cli) -> anyhow::Result<()> {
    if let Some(n) = threads(&cli.command) {
        if n == 0 {
            return Err(UsageError("--threads must be at least 1".into()).into());
        }
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    match &cli.command {
        Command::Fit(a) => commands::fit::run(a),
        Command::Interva(a) => commands::interva::run(a),
        Command::Debias(a) => commands::debias::run(a),
        Command::Evaluate(a) => commands::evaluate::run(a),
        Command::Split(a) => commands::data::split(a),
        Command::Simulate(a) => commands::data::simulate(a),
        Command::Rankify(a) => commands::data::rankify(a),
        Command::Diagnose(a) => commands::diagnose::run(a),
    }
}

fn main() -> ExitCode {
    let argv = match config::merge_config(std::env::args_os().collect()) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {}", render(&e));
            return ExitCode::from(exit_code(&e));
        }
    };
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    init_logging(cli.verbose);
    let name = cli.command.name();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {name}: {}", render(&e));
            ExitCode::from(exit_code(&e))
        }
    }
}

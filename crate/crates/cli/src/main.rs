mod commands;
mod config;

use std::process::ExitCode;

use clap::Parser;
use levelci::Error;

use config::{Cli, CommandKind, RunConfig};

fn exit_code(err: &Error) -> u8 {
    match err {
        Error::EmptyLevelSet { .. } | Error::NothingToDraw => 2,
        Error::Io(_) | Error::Csv { .. } => 4,
        _ => 3,
    }
}

fn run(cli: Cli) -> levelci::Result<()> {
    let (kind, flags) = cli.command.split();
    let cfg = RunConfig::resolve(kind, flags)?;
    match kind {
        CommandKind::Levelset => commands::levelset(&cfg),
        CommandKind::Confset => commands::confset(&cfg),
        CommandKind::Visualize => commands::visualize(&cfg),
        CommandKind::Coverage => commands::coverage(&cfg),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(3) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

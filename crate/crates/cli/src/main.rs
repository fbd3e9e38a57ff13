use std::fs;
use std::process::ExitCode;

use clap::Parser;
use gaussfid_cli::{run, Cli, CliError, EXIT_OK};

fn fail(e: CliError) -> ExitCode {
    eprintln!("{}", e.to_json());
    ExitCode::from(e.exit_code() as u8)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            print!("{e}");
            return ExitCode::from(EXIT_OK as u8);
        }
        Err(e) => return fail(CliError::Usage(e.to_string())),
    };
    let text = match run(&cli) {
        Ok(t) => t,
        Err(e) => return fail(e),
    };
    match &cli.out {
        Some(path) => {
            if let Err(e) = fs::write(path, text) {
                return fail(CliError::Input(format!("{}: {e}", path.display())));
            }
        }
        None => print!("{text}"),
    }
    ExitCode::SUCCESS
}

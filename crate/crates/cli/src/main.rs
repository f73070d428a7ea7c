use std::io::Write;
use std::process::ExitCode;

use clap::Parser;
use origami_entropy_cli::{execute, Cli, CliError};

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn run(cli: &Cli) -> Result<i32, CliError> {
    let (cfg, outcome) = execute(&cli.command)?;
    match &cfg.out {
        Some(path) => std::fs::write(path, &outcome.body)
            .map_err(|e| CliError::Validation(format!("cannot write {}: {e}", path.display())))?,
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(outcome.body.as_bytes())
                .and_then(|_| stdout.flush())
                .map_err(|e| CliError::Validation(format!("cannot write output: {e}")))?;
        }
    }
    for note in &outcome.notes {
        eprintln!("{note}");
    }
    Ok(outcome.exit_code)
}

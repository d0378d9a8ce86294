use std::process::ExitCode;

use clap::Parser;
use sta_cli::config::Cli;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match sta_cli::run(&cli.command) {
        Ok(o) => o,
        Err(err) => {
            eprintln!("error: {err:#}");
            return ExitCode::from(sta_cli::exit_code(&err));
        }
    };
    for note in &outcome.notes {
        eprintln!("{note}");
    }
    if let Err(err) = sta_cli::emit(&outcome.text, sta_cli::output_path(&cli.command)) {
        eprintln!("error: {err:#}");
        return ExitCode::FAILURE;
    }
    if outcome.failed {
        ExitCode::from(sta_cli::EXIT_VERIFICATION)
    } else {
        ExitCode::SUCCESS
    }
}

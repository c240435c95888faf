use std::process::ExitCode;

use clap::Parser;

fn main() -> ExitCode {
    let cli = itisc_cli::Cli::parse();
    match itisc_cli::run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

use std::process::ExitCode;

use besselpot_cli::{cli, Cli};
use clap::Parser;

fn main() -> ExitCode {
    let args = Cli::parse();
    match besselpot_cli::run(&args).and_then(|arts| cli::emit(&arts, args.out.as_deref())) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

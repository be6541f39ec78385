use std::process::ExitCode;

use clap::Parser;

use robscatter_cli::args::Cli;
use robscatter_cli::error::exit;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = robscatter_cli::run(&cli).and_then(|r| r.emit());
    match result {
        Ok(()) => ExitCode::from(exit::OK as u8),
        Err(e) => {
            eprintln!("robscatter: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

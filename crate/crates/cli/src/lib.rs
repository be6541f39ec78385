//! Library side of the `robscatter` command-line tool: argument and config
//! handling, CSV input, the commands, and report rendering.

pub mod args;
pub mod commands;
pub mod config;
pub mod error;
pub mod input;
pub mod output;

use std::io::Write;
use std::path::PathBuf;

use args::{Cli, Command};
use config::{resolve_common, FileConfig};
use error::{CliError, CliResult};
use output::Report;

/// A rendered report and where it goes (`None` for stdout).
pub struct Rendered {
    pub text: String,
    pub output: Option<PathBuf>,
}

/// Runs a parsed command line and renders its report.
pub fn run(cli: &Cli) -> CliResult<Rendered> {
    let file = match &cli.global.config {
        Some(path) => FileConfig::load(path)?,
        None => FileConfig::default(),
    };
    let common = resolve_common(&cli.global, &file);
    let work = || -> CliResult<String> {
        let format = common.format;
        Ok(match &cli.command {
            Command::Estimate(a) => commands::estimate(&common, a, &file)?.render(format),
            Command::Qq(a) => commands::qq(&common, a, &file)?.render(format),
            Command::Simulate(a) => commands::simulate(&common, a, &file)?.render(format),
            Command::Weights(a) => commands::weights(&common, a, &file)?.render(format),
            Command::Calibrate(a) => commands::calibrate(&common, a, &file)?.render(format),
        })
    };
    let text = match common.threads {
        Some(0) => return Err(CliError::Usage("threads must be positive".into())),
        Some(t) => rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build()
            .map_err(|e| CliError::Usage(format!("cannot start {t} threads: {e}")))?
            .install(work)?,
        None => work()?,
    };
    Ok(Rendered { text, output: common.output.clone() })
}

impl Rendered {
    pub fn emit(&self) -> CliResult<()> {
        match &self.output {
            Some(path) => std::fs::write(path, &self.text).map_err(CliError::Output),
            None => {
                let mut out = std::io::stdout().lock();
                out.write_all(self.text.as_bytes()).and_then(|_| out.flush()).map_err(CliError::Output)
            }
        }
    }
}

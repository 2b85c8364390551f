use std::io::Write;

use clap::Parser;
use phasesvd_cli::{run, Cli, CliConfig};

fn main() {
    let config = CliConfig::from(Cli::parse());
    let outcome = run(&config);
    // Ignore broken pipes; the exit code still reports the result.
    let _ = std::io::stdout().write_all(outcome.stdout.as_bytes());
    let _ = std::io::stderr().write_all(outcome.stderr.as_bytes());
    std::process::exit(outcome.code);
}

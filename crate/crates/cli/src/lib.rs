//! Command-line front end: argument parsing, effective configuration, the
//! subcommands and their CSV / JSON / markdown / SVG outputs.

pub mod args;
pub mod commands;
pub mod config;
pub mod render;
pub mod report;
pub mod svg;

pub use args::{Cli, Command};
pub use commands::Outcome;

pub fn run(cli: &Cli) -> anyhow::Result<Outcome> {
    match &cli.command {
        Command::Audit(a) => commands::cmd_audit(a),
        Command::Thresholds(a) => commands::cmd_thresholds(a),
        Command::Ablate(a) => commands::cmd_ablate(a),
        Command::Compare(a) => commands::cmd_compare(a),
        Command::Synth(a) => commands::cmd_synth(a),
        Command::Report(a) => commands::cmd_report(a),
    }
}

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use qmcf_core::config::RunConfig;
use qmcf_core::experiment::{default_out_dir, execute, report_text, Subcommand};
use qmcf_core::Error;

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Command {
    VerifyPotential,
    BuildDtable,
    #[value(name = "profile-1d")]
    Profile1d,
    McfBenchmark,
    Simulate,
    Report,
}

impl Command {
    fn subcommand(self) -> Subcommand {
        match self {
            Command::VerifyPotential => Subcommand::VerifyPotential,
            Command::BuildDtable => Subcommand::BuildDtable,
            Command::Profile1d => Subcommand::Profile1d,
            Command::McfBenchmark => Subcommand::McfBenchmark,
            Command::Simulate => Subcommand::Simulate,
            Command::Report => Subcommand::Report,
        }
    }

    /// Exit code when the run completes but a check fails.
    fn check_failure_code(self) -> u8 {
        10 + self as u8
    }
}

/// Q-tensor gradient flow experiments against mean curvature flow.
#[derive(Debug, Parser)]
#[command(name = "qmcf", version)]
struct Cli {
    #[arg(value_enum)]
    command: Command,
    /// Configuration file; defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory (default: `output.out_dir/<subcommand>`).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Per-key override, `section.key=value`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

fn error_code(e: &Error) -> u8 {
    match e {
        Error::Config { .. } => 3,
        Error::Io { .. } | Error::Parse { .. } => 4,
        Error::Unstable { .. } => 5,
        Error::Extinction(_) | Error::Domain(_) | Error::Degenerate(_) => 6,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let cfg = match &cli.config {
        Some(p) => RunConfig::load(p, &cli.set),
        None => RunConfig::parse("", &cli.set),
    };
    let cfg = match cfg {
        Ok(c) => c,
        Err(e) => {
            eprintln!("qmcf: {e}");
            return ExitCode::from(error_code(&e));
        }
    };
    let cmd = cli.command.subcommand();
    let dir = cli.out.clone().unwrap_or_else(|| default_out_dir(&cfg, cmd));
    match execute(cmd, &cfg, &dir) {
        Ok(outcome) => {
            for (k, v) in &outcome.summary {
                println!("{k} = {v}");
            }
            if let Some(sum) = &outcome.dtable_checksum {
                println!("dtable_checksum = {sum}");
            }
            for w in &outcome.warnings {
                println!("warning: {w}");
            }
            for c in &outcome.checks {
                println!("{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
            }
            if let (Subcommand::Report, Some(text)) = (cmd, report_text(&dir)) {
                print!("{text}");
            }
            println!("output: {}", dir.display());
            if outcome.passed() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(cli.command.check_failure_code())
            }
        }
        Err(e) => {
            eprintln!("qmcf {}: {e}", cmd.name());
            eprintln!("partial output kept in {}", dir.display());
            ExitCode::from(error_code(&e))
        }
    }
}

use std::process::ExitCode;

use actnas_cli::{cmd_bench_tables, cmd_nwot, cmd_report, cmd_search, Cli, CliError, Command};
use clap::Parser;

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::BenchTables(cfg) => {
            for path in cmd_bench_tables(&cfg)? {
                println!("{}", path.display());
            }
        }
        Command::Search(cfg) => {
            let report = cmd_search(&cfg)?;
            if let Some(out) = &cfg.out {
                eprintln!("{} proposal(s) written to {}", report.proposals.len(), out.display());
            }
        }
        Command::Report(cfg) => print!("{}", cmd_report(&cfg)?.text),
        Command::Nwot(cfg) => {
            let score = cmd_nwot(&cfg)?;
            println!("score={} degenerate={}", score.value, score.degenerate);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

use std::process::ExitCode;

use clap::Parser;
use pinning_cli::lithium::{cmd_lithium, render};
use pinning_cli::{
    cmd_analyze, render_constraints, verify, Cli, Command, RunConfig, EXIT_FAILURE, EXIT_NOT_CONVERGED, EXIT_USAGE,
};

fn exit(code: i32) -> ExitCode {
    ExitCode::from(code as u8)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => exit(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            exit(exit_code(&e))
        }
    }
}

fn exit_code(e: &anyhow::Error) -> i32 {
    for cause in e.chain() {
        if cause.is::<pinning_cli::UsageError>() {
            return EXIT_USAGE;
        }
        if let Some(pinning_core::Error::NotConverged { .. }) = cause.downcast_ref() {
            return EXIT_NOT_CONVERGED;
        }
    }
    EXIT_FAILURE
}

fn run(cli: Cli) -> anyhow::Result<i32> {
    match cli.command {
        Command::Lithium(args) => {
            let cfg = RunConfig::from_args(&args)?;
            let report = cmd_lithium(&cfg)?;
            print!("{}", render(&report, cfg.format)?);
            Ok(if report.converged { 0 } else { EXIT_NOT_CONVERGED })
        }
        Command::Analyze(args) => {
            let report = cmd_analyze(&args)?;
            print!("{}", render_constraints(&report, args.format)?);
            Ok(0)
        }
        Command::Verify(args) => {
            let checks = verify::run(args.suite, args.seed)?;
            for c in &checks {
                println!("{c}");
            }
            let failed = checks.iter().filter(|c| !c.passed()).count();
            println!("{} checks, {} failed", checks.len(), failed);
            Ok(if failed == 0 { 0 } else { EXIT_FAILURE })
        }
    }
}

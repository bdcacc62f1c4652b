use std::process::ExitCode;

use clap::Parser;
use efgfom_cli::args::{Cli, Command};
use efgfom_cli::{cmd_generate, cmd_solve, cmd_validate, configure_threads, report_json};

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> anyhow::Result<ExitCode> {
    configure_threads()?;
    match cli.command {
        Command::Generate(args) => {
            println!("{}", cmd_generate(&args)?);
            Ok(ExitCode::SUCCESS)
        }
        Command::Solve(args) => {
            let (dir, out) = cmd_solve(&args)?;
            println!("{}", dir.display());
            println!("{}", serde_json::to_string_pretty(&out.summary)?);
            Ok(ExitCode::SUCCESS)
        }
        Command::Validate(args) => {
            let report = cmd_validate(&args)?;
            println!("{}", report_json(&report));
            if report.passed {
                Ok(ExitCode::SUCCESS)
            } else {
                for c in report.failures() {
                    eprintln!("failed: {} {} ({} {:?} {})", c.domain, c.name, c.statistic, c.relation, c.threshold);
                }
                Ok(ExitCode::FAILURE)
            }
        }
    }
}

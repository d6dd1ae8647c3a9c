use std::io::Write;
use std::process::ExitCode;

use clap::Parser;
use env_logger::Env;
use llcp_cli::{run, Cli};

fn main() -> ExitCode {
    env_logger::Builder::from_env(Env::new().filter_or("LLCP_LOG", "warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            // usage errors are validation failures; exit 2 means non-optimal
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let json = match &cli.command {
        llcp_cli::args::Command::Check(a) => a.output.json,
        llcp_cli::args::Command::Solve(a) => a.output.json,
        llcp_cli::args::Command::Sensitivity(a) => a.output.json,
        llcp_cli::args::Command::Backward(a) => a.output.json,
        llcp_cli::args::Command::FitRegression(a) => a.output.json,
        llcp_cli::args::Command::Export(_) => false,
    };
    let report = run(&cli);
    // a closed pipe is not an error of the command
    let _ = if json {
        writeln!(
            std::io::stdout(),
            "{}",
            serde_json::to_string_pretty(&report.json).expect("serializable")
        )
    } else if report.json.get("error").is_none() {
        write!(std::io::stdout(), "{}", report.text)
    } else {
        write!(std::io::stderr(), "{}", report.text)
    };
    ExitCode::from(report.code as u8)
}

use std::process::ExitCode;

use clap::Parser;

fn main() -> ExitCode {
    let cli = sa_graph::Cli::parse();
    match sa_graph::run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("sa-graph: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

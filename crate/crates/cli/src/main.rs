use std::process::ExitCode;

use clap::Parser;

fn main() -> ExitCode {
    let cli = framecue_cli::Cli::parse();
    let filter = tracing_subscriber::EnvFilter::try_from_env("FRAMECUE_LOG")
        .unwrap_or_else(|_| "warn".into());
    tracing_subscriber::fmt()
        .with_env_filter(filter)
        .with_writer(std::io::stderr)
        .init();
    match framecue_cli::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

mod args;
mod commands;
mod report;

use std::process::ExitCode;

use clap::error::ErrorKind as ClapErrorKind;
use clap::Parser;
use clusterpath::ErrorKind;

use args::{Cli, Command};

/// Bad flag combinations detected after parsing.
#[derive(Debug)]
pub struct UsageError(pub String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

const EXIT_USAGE: u8 = 1;
const EXIT_DATA: u8 = 2;
const EXIT_NUMERIC: u8 = 3;

fn exit_code(err: &anyhow::Error) -> u8 {
    if err.downcast_ref::<UsageError>().is_some() {
        return EXIT_USAGE;
    }
    match err.downcast_ref::<clusterpath::Error>().map(clusterpath::Error::kind) {
        Some(ErrorKind::Numeric) => EXIT_NUMERIC,
        _ => EXIT_DATA,
    }
}

fn run(cli: Cli) -> anyhow::Result<()> {
    if let Some(n) = cli.threads {
        if n == 0 {
            anyhow::bail!(UsageError("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    match &cli.command {
        Command::Fit(a) => commands::fit(a),
        Command::Assign(a) => commands::assign(a),
        Command::Metrics(a) => commands::metrics(a),
        Command::Daf(a) => commands::daf(a),
        Command::Agreement(a) => commands::agreement(a),
        Command::OodFit(a) => commands::ood_fit(a),
        Command::OodScore(a) => commands::ood_score(a),
        Command::OodEval(a) => commands::ood_eval(a),
        Command::Synth(a) => commands::synth(a),
        Command::Perturb(a) => commands::perturb(a),
        Command::Report(a) => commands::report(a),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .format_timestamp(None)
        .init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ClapErrorKind::DisplayHelp | ClapErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(EXIT_USAGE),
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

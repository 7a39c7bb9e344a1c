//! `medlat`: one binary with a subcommand per pipeline stage.
//!
//! Exit status is 0 on success, 1 when a module reports an error (the
//! message starts with the error's name, e.g. `AlignmentMismatch`), and 2
//! on usage errors.

mod args;
mod commands;
mod config;

use std::process::ExitCode;

use clap::Parser;

use args::{Cli, Command, CorpusCmd};
use config::Settings;

fn run(cli: &Cli) -> anyhow::Result<()> {
    let settings = Settings::resolve(cli)?;
    env_logger::Builder::new()
        .filter_level(settings.log_level)
        .format_timestamp(None)
        .try_init()
        .ok();
    log::debug!("settings: {settings:?}");
    match &cli.command {
        Command::Corpus(CorpusCmd::Stats(a)) => commands::corpus_stats(&settings, a),
        Command::Corpus(CorpusCmd::Validate(a)) => commands::corpus_validate(&settings, a),
        Command::Normalize(a) => commands::normalize(&settings, a),
        Command::Tagger(c) => commands::tagger(&settings, c),
        Command::Lemmatize(c) => commands::lemmatizer(&settings, c),
        Command::Scenario(c) => commands::scenario(&settings, c),
        Command::Eval(a) => commands::eval(&settings, a),
        Command::Analyze(a) => commands::analyze(&settings, a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

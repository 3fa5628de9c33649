mod args;
mod commands;

use std::process::ExitCode;

use clap::Parser;
use topic_score::TopicError;

use args::{Cli, Command};
use commands::Outcome;

const THREADS_VAR: &str = "TOPIC_SCORE_THREADS";

fn configure_threads() {
    let Ok(raw) = std::env::var(THREADS_VAR) else {
        return;
    };
    match raw.trim().parse::<usize>() {
        // 0 leaves the choice to rayon.
        Ok(n) => {
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
        }
        Err(_) => eprintln!("warning: ignoring {THREADS_VAR}={raw:?}"),
    }
}

fn exit_code(err: &TopicError) -> u8 {
    if err.is_numerical() {
        3
    } else {
        2
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    configure_threads();
    let result = match &cli.command {
        Command::Fit(a) => commands::cmd_fit(a),
        Command::Synth(a) => commands::cmd_synth(a),
        Command::OracleCheck(a) => commands::cmd_oracle_check(a),
    };
    match result {
        Ok(Outcome::Ok) => ExitCode::SUCCESS,
        Ok(Outcome::CheckFailed) => ExitCode::from(1),
        Err(err) => {
            let body = serde_json::json!({ "error": err.code(), "message": err.to_string() });
            eprintln!("{body}");
            ExitCode::from(exit_code(&err))
        }
    }
}

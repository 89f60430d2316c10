//! Command-line front end. Exit codes: 0 success, 1 configuration error,
//! 2 data/artifact error, 3 verification failure.

mod opts;
mod run;
mod sweep;
mod verify;

use clap::Parser;

use opts::{Cli, Cmd};

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    let result = match &cli.command {
        Cmd::Train(cmd) => opts::resolve_train(cmd).and_then(|s| run::cmd_train(&s)),
        Cmd::Evaluate(cmd) => run::cmd_evaluate(cmd),
        Cmd::Verify(cmd) => verify::cmd_verify(cmd),
        Cmd::Sweep(cmd) => opts::resolve_sweep(cmd).and_then(|s| sweep::cmd_sweep(&s)),
    };
    if let Err(e) = result {
        eprintln!("error: {e}");
        std::process::exit(exit_code(&e));
    }
}

fn exit_code(e: &purank::Error) -> i32 {
    use purank::Error;
    match e {
        Error::Config(_) => 1,
        Error::Verification(_) => 3,
        Error::Data(_) | Error::Io(_) | Error::Artifact(_) | Error::Domain(_)
        | Error::NonFinite(_) => 2,
    }
}

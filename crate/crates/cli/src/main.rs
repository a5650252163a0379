use std::process::ExitCode;

use clap::Parser;

use povm_coherence_cli::error::EXIT_USAGE;
use povm_coherence_cli::{run, Cli, CliError};

fn report(e: &CliError) -> ExitCode {
    eprintln!("{}", e.to_json());
    ExitCode::from(e.exit_code())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            // --help and --version
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let err = CliError::usage(e.render().to_string().trim_end());
            debug_assert_eq!(err.exit_code(), EXIT_USAGE);
            return report(&err);
        }
    };
    match run(cli) {
        Ok(None) => ExitCode::SUCCESS,
        Ok(Some(e)) | Err(e) => report(&e),
    }
}

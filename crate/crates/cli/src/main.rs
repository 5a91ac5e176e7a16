use std::process::ExitCode;

use clap::Parser;
use defectlab_cli::config::Cli;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = cli.into_config().and_then(|cfg| defectlab_cli::run(&cfg));
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("defectlab: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

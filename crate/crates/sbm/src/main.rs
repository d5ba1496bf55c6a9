use std::process::ExitCode;

use clap::error::ErrorKind;

fn main() -> ExitCode {
    match sbm::cli::run_from(std::env::args_os()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            if let Some(ce) = e.downcast_ref::<clap::Error>() {
                if matches!(ce.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                    print!("{ce}");
                    return ExitCode::SUCCESS;
                }
            }
            eprintln!("error: {}", sbm::cli::one_line_error(&e));
            ExitCode::FAILURE
        }
    }
}

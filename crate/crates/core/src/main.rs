use std::process::ExitCode;

fn main() -> ExitCode {
    ExitCode::from(duoprice::cli::run(std::env::args_os()))
}

use std::process::ExitCode;

fn main() -> ExitCode {
    ExitCode::from(simplexflow_cli::run(std::env::args_os()))
}

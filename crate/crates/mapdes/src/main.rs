use std::process::ExitCode;

fn main() -> ExitCode {
    mapdes::cli::main_with_args(std::env::args_os())
}

use std::process::ExitCode;

fn main() -> ExitCode {
    traffic_calc::cli::main_with_args(std::env::args_os())
}

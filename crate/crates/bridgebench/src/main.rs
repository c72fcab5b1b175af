use std::process::ExitCode;

fn main() -> ExitCode {
    bridgebench::cli::main(std::env::args_os())
}

use std::process::ExitCode;

fn main() -> ExitCode {
    a3kit::cli::main_impl()
}

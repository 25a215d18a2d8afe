use std::process::ExitCode;

fn main() -> ExitCode {
    bhtest::harness::cli::main()
}

use std::process::ExitCode;

fn main() -> ExitCode {
    yarrow::cli::main()
}

use std::process::ExitCode;

fn main() -> ExitCode {
    handvqa::cli::main()
}

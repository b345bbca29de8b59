use std::process::ExitCode;

fn main() -> ExitCode {
    imvar::cli::main()
}

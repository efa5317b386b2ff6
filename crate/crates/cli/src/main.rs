use std::process::ExitCode;

fn main() -> ExitCode {
    heatcont_cli::main()
}

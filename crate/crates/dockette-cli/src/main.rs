use std::process::ExitCode;

fn main() -> ExitCode {
    ExitCode::from(dockette_cli::main_run(std::env::args_os()) as u8)
}

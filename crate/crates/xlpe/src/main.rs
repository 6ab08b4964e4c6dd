use std::process::ExitCode;

fn main() -> ExitCode {
    // Malformed input is reported through errors; a panic here is a bug,
    // but it still maps to the runtime-failure status.
    match std::panic::catch_unwind(|| xlpe::cli::run(std::env::args_os())) {
        Ok(code) => ExitCode::from(code),
        Err(_) => ExitCode::from(3),
    }
}

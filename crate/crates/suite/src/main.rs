//! The `mfv` command line, rebuilt inside this package so the acceptance
//! suite can run it as a separate process.

fn main() -> std::process::ExitCode {
    mfv_cli::main()
}

fn main() -> std::process::ExitCode {
    mfv_cli::main()
}

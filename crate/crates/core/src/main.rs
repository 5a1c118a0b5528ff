fn main() -> std::process::ExitCode {
    spinsqueeze::cli::main()
}

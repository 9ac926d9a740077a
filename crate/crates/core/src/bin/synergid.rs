fn main() -> std::process::ExitCode {
    synergid::cli::main()
}

fn main() -> std::process::ExitCode {
    srrescycgan::cli::main()
}

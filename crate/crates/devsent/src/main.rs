fn main() -> std::process::ExitCode {
    devsent::cli::main()
}

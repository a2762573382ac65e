fn main() -> std::process::ExitCode {
    strelgen_cli::main_with_args(std::env::args_os())
}

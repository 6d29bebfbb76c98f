fn main() -> std::process::ExitCode {
    lvgm::cli::main_with_args(std::env::args_os())
}

fn main() -> std::process::ExitCode {
    vpmac::cli::main_with_args(std::env::args_os())
}

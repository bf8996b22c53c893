fn main() -> std::process::ExitCode {
    hauptmodul_traces::cli::main_with_args(std::env::args_os())
}

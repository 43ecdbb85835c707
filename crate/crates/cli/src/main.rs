fn main() -> std::process::ExitCode {
    landmark_cli::run(std::env::args_os())
}

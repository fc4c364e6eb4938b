fn main() {
    std::process::exit(mvope_cli::run_cli(std::env::args_os()));
}

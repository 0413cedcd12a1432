fn main() {
    std::process::exit(mixshor_cli::parse_and_run(std::env::args_os()));
}

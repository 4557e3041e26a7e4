fn main() {
    std::process::exit(benney_cli::run_cli(std::env::args_os()));
}

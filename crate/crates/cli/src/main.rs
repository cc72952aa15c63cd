fn main() {
    std::process::exit(soupdil_cli::run_cli(std::env::args_os()));
}

fn main() {
    std::process::exit(solvency_cli::run(std::env::args_os()));
}

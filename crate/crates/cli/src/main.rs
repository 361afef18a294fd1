fn main() {
    std::process::exit(tailq_cli::run(std::env::args_os()));
}

fn main() {
    std::process::exit(balance::cli::run(std::env::args_os()));
}

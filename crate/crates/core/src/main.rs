fn main() {
    std::process::exit(chatcheck::cli::run(std::env::args_os()));
}

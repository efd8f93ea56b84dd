fn main() {
    std::process::exit(audiostego::cli::run(std::env::args_os()));
}

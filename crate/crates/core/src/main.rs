fn main() {
    std::process::exit(deepgb::cli::run(std::env::args_os()));
}

fn main() {
    std::process::exit(gyrocal::cli::run(std::env::args_os()));
}

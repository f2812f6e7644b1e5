fn main() {
    std::process::exit(comply::cli::run(std::env::args_os()));
}

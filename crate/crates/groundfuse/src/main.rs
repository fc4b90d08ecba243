fn main() {
    std::process::exit(groundfuse::cli::run(std::env::args_os()));
}

fn main() {
    std::process::exit(basenode::cli::run_from(std::env::args_os()));
}

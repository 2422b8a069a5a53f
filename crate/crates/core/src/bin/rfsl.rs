fn main() {
    std::process::exit(rfsl::cli::run(std::env::args_os()));
}

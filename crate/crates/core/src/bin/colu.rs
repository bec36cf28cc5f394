fn main() {
    std::process::exit(colu_core::cli::run(std::env::args_os()));
}

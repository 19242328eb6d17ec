fn main() {
    std::process::exit(prbox::cli::run(std::env::args_os()));
}

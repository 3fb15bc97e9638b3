fn main() {
    std::process::exit(restrictlab::cli::run(std::env::args_os()));
}

fn main() {
    std::process::exit(cogbert::cli::run(std::env::args_os()));
}

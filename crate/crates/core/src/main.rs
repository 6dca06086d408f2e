fn main() {
    std::process::exit(percoflow::cli::run(std::env::args_os()));
}

fn main() {
    std::process::exit(fanpart::cli::run(std::env::args_os()));
}

fn main() {
    std::process::exit(ciblp::cli::run(std::env::args_os()));
}

fn main() {
    std::process::exit(dirsim::cli::run(std::env::args()));
}

fn main() {
    std::process::exit(heavytail::cli::run());
}

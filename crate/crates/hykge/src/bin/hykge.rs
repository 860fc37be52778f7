fn main() {
    std::process::exit(hykge::cli::run());
}

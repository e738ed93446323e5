fn main() {
    std::process::exit(hintseg::cli::run());
}

fn main() {
    std::process::exit(fracvar::cli::run());
}

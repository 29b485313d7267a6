fn main() {
    std::process::exit(mvsbm::cli::run());
}

fn main() {
    std::process::exit(bqnet::cli::run());
}

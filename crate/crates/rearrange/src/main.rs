fn main() {
    std::process::exit(rearrange::cli::run());
}

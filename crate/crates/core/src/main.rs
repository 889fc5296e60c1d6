fn main() {
    std::process::exit(nld_stability::cli::main());
}

fn main() {
    std::process::exit(evonas::cli::run());
}

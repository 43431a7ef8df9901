fn main() {
    std::process::exit(caselint::cli::run_from_env());
}

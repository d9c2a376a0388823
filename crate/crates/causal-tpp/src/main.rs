fn main() {
    std::process::exit(causal_tpp::cli::run(std::env::args_os()));
}

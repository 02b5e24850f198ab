fn main() {
    let argv: Vec<String> = std::env::args().collect();
    std::process::exit(pqcausal_cli::run(argv));
}

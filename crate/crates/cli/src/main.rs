fn main() {
    let argv: Vec<String> = std::env::args().collect();
    std::process::exit(geoqs_cli::run(argv));
}

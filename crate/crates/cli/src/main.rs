fn main() {
    std::process::exit(iceberg_cli::run(std::env::args_os()));
}

fn main() {
    std::process::exit(mixmoran_cli::run(std::env::args_os()));
}

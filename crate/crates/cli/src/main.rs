fn main() {
    std::process::exit(lenstrans_cli::run(std::env::args_os()));
}

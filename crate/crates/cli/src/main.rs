fn main() {
    std::process::exit(webly_cli::run(std::env::args_os()));
}

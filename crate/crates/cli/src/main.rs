fn main() {
    std::process::exit(coalesce_cli::run(std::env::args_os()));
}

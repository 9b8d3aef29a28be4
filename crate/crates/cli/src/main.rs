fn main() {
    std::process::exit(spacelike_cli::run(std::env::args_os()));
}

fn main() {
    std::process::exit(mirrorfield_cli::run(std::env::args_os()));
}

fn main() {
    std::process::exit(quenchlab_cli::run(std::env::args_os()));
}

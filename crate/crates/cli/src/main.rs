fn main() {
    std::process::exit(swlab_cli::run(std::env::args_os()));
}

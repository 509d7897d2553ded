fn main() {
    std::process::exit(brdg_cli::run(std::env::args_os()));
}

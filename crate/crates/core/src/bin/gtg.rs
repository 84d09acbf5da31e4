fn main() {
    std::process::exit(gtg::cli::run(std::env::args_os()));
}

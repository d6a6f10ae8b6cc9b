fn main() {
    std::process::exit(wcfg::cli::run(std::env::args_os()));
}

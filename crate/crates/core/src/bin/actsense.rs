fn main() {
    std::process::exit(actsense::cli::run(std::env::args_os()));
}

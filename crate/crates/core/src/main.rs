fn main() {
    std::process::exit(l2track::cli::run(std::env::args_os()));
}

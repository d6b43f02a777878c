fn main() {
    std::process::exit(releq::run_from(std::env::args_os()));
}

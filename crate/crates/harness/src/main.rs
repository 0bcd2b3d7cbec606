fn main() {
    std::process::exit(disperse_harness::cli::run(std::env::args_os()));
}

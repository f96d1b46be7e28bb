fn main() {
    std::process::exit(fmsolve::cli::run_from(std::env::args_os()));
}

fn main() {
    std::process::exit(approxop::cli::run(std::env::args_os()));
}

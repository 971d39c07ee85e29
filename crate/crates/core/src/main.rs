fn main() {
    std::process::exit(amrsum::cli::run(std::env::args_os()));
}

fn main() {
    std::process::exit(qalloc::cli::run(std::env::args_os()));
}

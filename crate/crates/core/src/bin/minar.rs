fn main() {
    std::process::exit(minar::cli::run(std::env::args_os()));
}

fn main() {
    std::process::exit(symfd::cli::run(std::env::args_os()));
}

fn main() {
    std::process::exit(maxlab::cli::main_with_args(std::env::args_os()));
}

fn main() {
    std::process::exit(attnloop::cli::main_with_args(std::env::args_os()));
}

fn main() {
    std::process::exit(psos::cli::main_with_args(std::env::args_os()));
}

fn main() {
    std::process::exit(medner::cli::main_with_args(std::env::args_os()));
}

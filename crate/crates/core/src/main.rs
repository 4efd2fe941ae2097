fn main() {
    std::process::exit(bioopt::cli::main_with_args(std::env::args_os()));
}

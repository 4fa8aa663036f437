fn main() {
    std::process::exit(qrac::cli::main_with_args(std::env::args_os()));
}

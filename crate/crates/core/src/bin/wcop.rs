fn main() {
    std::process::exit(wcop::cli::main_with_args(std::env::args_os()));
}

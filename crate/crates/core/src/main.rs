fn main() {
    std::process::exit(adaptive_signal::cli::main_with_args(std::env::args_os()));
}

fn main() {
    std::process::exit(sweepdd::cli::main_with_args(std::env::args_os()));
}

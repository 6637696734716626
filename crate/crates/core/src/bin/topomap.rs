fn main() {
    std::process::exit(topomap::cli::main_with_args(std::env::args_os()));
}

fn main() {
    std::process::exit(qmap::cli::main_with(std::env::args_os()));
}

fn main() {
    std::process::exit(coulhole::cli::main_with(std::env::args_os()));
}

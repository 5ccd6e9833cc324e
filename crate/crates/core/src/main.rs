fn main() {
    std::process::exit(gridid::cli::main_with(std::env::args_os()));
}

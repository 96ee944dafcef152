fn main() {
    std::process::exit(switchset::cli::main_with_args(std::env::args_os()));
}

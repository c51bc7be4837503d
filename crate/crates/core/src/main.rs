fn main() {
    std::process::exit(gradrobust::cli::main_with_args(std::env::args_os()));
}

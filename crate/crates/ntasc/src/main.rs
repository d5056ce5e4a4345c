fn main() {
    std::process::exit(ntasc::cli::main_with_args(std::env::args_os()));
}
